#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "supercorr/fit.hpp"
#include "supercorr/geometry.hpp"
#include "supercorr/scf.hpp"
#include "supercorr/sources.hpp"

namespace supercorr {

enum class Pipeline { quadratic_response, full_scf, both };
Pipeline pipeline_from_string(const std::string& s);
const char* pipeline_name(Pipeline p);

struct StudyConfig {
  LatticeGeometry geometry = LatticeGeometry::cubic(1.0);
  SourceDensity mu;
  SourceDensity nu;
  std::optional<SourceDensity> neutral_nu;  // control run through the same ladder
  int electrons_per_cell = 0;
  double cutoff = 4.0;
  double smooth_from = 1.0;
  std::vector<int> L_ladder;
  Pipeline pipeline = Pipeline::quadratic_response;
  int response_grid_P = 8;
  int bz_gl_order = 6;
  int periodic_L = 0;          // grid of the reference periodic solve; 0 selects the largest ladder entry
  double mixing_alpha = 0.5;
  int anderson_depth = 5;
  double scf_tol = 1e-9;
  double fit_noise = 0;        // residuals below this are treated as noise by the exponent fit

  void validate() const;
  SCFConfig scf_config(int L) const;
  static StudyConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Constants shared by both pipelines, recomputed for every study.
struct StudyConstants {
  double charge = 0;
  Mat3 M0 = Mat3::Identity();
  double epsilon = 0;          // 0 unless the crystal is isotropic cubic
  bool isotropic_cubic = false;
  double a = 0;
  double a_error = 0;
  std::optional<double> madelung;
  double gap = 0;
  double eps_F = 0;
  // Predicted slope of the fitted value: -2 pi a q^2 / |Gamma|.
  double predicted_slope = 0;
  nlohmann::json to_json() const;
};

struct ConvergenceReport {
  std::string pipeline;
  std::vector<int> Ls;
  std::vector<double> values;
  std::vector<double> corrected;    // value + (2 pi a q^2 / |Gamma|) / L
  InverseLFit fit;
  InverseLFit corrected_fit;
  double predicted_slope = 0;
  double deviation = 0;             // |s - s*| / |s*|
  std::vector<double> linear_terms; // -\int V0 nu per L (diagnostic)
  // Neutral control, when configured.
  std::vector<double> neutral_values;
  std::optional<InverseLFit> neutral_fit;
  double neutral_ratio = 0;         // |s_neutral| / |s|
  // SCF only.
  std::vector<long> occupied_defect;
  std::vector<long> occupied_periodic;
  std::vector<double> margins;
  std::vector<double> gaps;
  double successive_ratio = 0;      // raw over corrected successive difference at the largest L
  nlohmann::json to_json() const;
};

// The three remainder scales: ||nu||^3 from a charge scaling, L^-3 and an
// exponential floor from the ladder residual. Diagnostic only.
struct RemainderModel {
  double cubic = 0;          // C in J(t nu) = A t + B t^2 + C t^3
  double inverse_cube = 0;   // c in c / L^3
  double exponential = 0;    // d in d e^{-alpha L}
  double alpha = 0;
  nlohmann::json to_json() const;
};

// Least squares of residuals on {L^-3, e^{-alpha L}} with alpha scanned.
RemainderModel fit_remainder(const std::vector<int>& Ls, const std::vector<double>& residuals);
// Cubic coefficient from values at three distinct scalings t of nu.
double cubic_scaling_coefficient(const std::vector<double>& ts, const std::vector<double>& values);

StudyConstants study_constants(const StudyConfig& cfg);
ConvergenceReport run_quadratic_study(const StudyConfig& cfg, const StudyConstants& c);
ConvergenceReport run_quadratic_study(const StudyConfig& cfg);
ConvergenceReport run_scf_study(const StudyConfig& cfg, const StudyConstants& c);
ConvergenceReport run_scf_study(const StudyConfig& cfg);

struct StudyResult {
  StudyConfig config;
  StudyConstants constants;
  std::vector<ConvergenceReport> reports;
};
StudyResult run_study(const StudyConfig& cfg);

// report.json, ladder.csv and constants.csv in `dir` (created if missing).
void write_study_outputs(const StudyResult& r, const std::string& dir);

}  // namespace supercorr
