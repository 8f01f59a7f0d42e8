#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "supercorr/errors.hpp"
#include "supercorr/fit.hpp"
#include "supercorr/io.hpp"
#include "supercorr/study.hpp"

using namespace supercorr;
using std::numbers::pi;

namespace {

nlohmann::json model_json() {
  return nlohmann::json::parse(R"({
    "lattice": [4, 0, 0, 0, 4, 0, 0, 0, 4],
    "mu_per": {"gaussians": [{"center_frac": [0, 0, 0], "sigma": 0.4, "weight": 5},
                             {"center_frac": [0, 0, 0], "sigma": 1.5, "weight": -4}]},
    "nu": {"gaussians": [{"center_frac": [0, 0, 0], "sigma": 0.5, "weight": 0.2}], "support_L": 2},
    "electrons_per_cell": 1,
    "cutoff": {"ecut": 4, "smooth_from": 0.5},
    "L_ladder": [2, 3, 4],
    "pipeline": "quadratic_response",
    "response_grid_P": 4,
    "bz_gl_order": 4,
    "mixing": {"alpha": 0.5, "anderson_depth": 5},
    "tolerances": {"scf": 1e-10, "fit": 0}
  })");
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("inverse-L fit recovers intercept and slope of exact data") {
  std::vector<int> Ls{2, 3, 4, 5, 6};
  std::vector<double> v;
  for (int L : Ls) v.push_back(3.0 - 2.0 / L);
  InverseLFit f = fit_inverse_L(v, Ls);
  CHECK(f.intercept == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(f.slope == doctest::Approx(-2.0).epsilon(1e-12));
  for (double r : f.residuals) CHECK(std::abs(r) < 1e-12);
}

TEST_CASE("inverse-L fit reports the exponent of an L^-3 remainder") {
  std::vector<int> Ls{2, 3, 4, 5, 6, 8, 10, 12};
  std::vector<double> v;
  for (int L : Ls) v.push_back(1.0 + 0.5 / L + 0.3 * std::pow(L, -3.0));
  InverseLFit f = fit_inverse_L(v, Ls);
  CHECK(f.residual_exponent == doctest::Approx(3.0).epsilon(0.05));
  CHECK(f.condition > 1);
  // Below the noise floor no exponent is reported.
  CHECK(fit_inverse_L(v, Ls, 1.0).residual_exponent == 0.0);
}

TEST_CASE("remainder model separates L^-3 and exponential parts on synthetic data") {
  std::vector<int> Ls{2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<double> r;
  for (int L : Ls) r.push_back(0.2 * std::pow(L, -3.0) + 0.5 * std::exp(-1.5 * L));
  RemainderModel m = fit_remainder(Ls, r);
  CHECK(m.alpha == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(m.inverse_cube == doctest::Approx(0.2).epsilon(1e-6));
  CHECK(m.exponential == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("cubic scaling coefficient") {
  auto J = [](double t) { return 0.7 * t - 1.1 * t * t + 0.4 * t * t * t; };
  CHECK(cubic_scaling_coefficient({0.5, 1.0, 2.0}, {J(0.5), J(1.0), J(2.0)}) == doctest::Approx(0.4).epsilon(1e-10));
  CHECK_THROWS_AS(cubic_scaling_coefficient({1.0, 1.0, 2.0}, {0, 0, 0}), RankDeficientError);
  CHECK_THROWS_AS(cubic_scaling_coefficient({1.0, 2.0}, {0, 0}), RankDeficientError);
}

TEST_CASE("study configuration round trip and validation") {
  StudyConfig c = StudyConfig::from_json(model_json());
  CHECK(c.electrons_per_cell == 1);
  CHECK(c.smooth_from == 0.5);
  CHECK(c.L_ladder.size() == 3);
  StudyConfig d = StudyConfig::from_json(c.to_json());
  CHECK(d.to_json() == c.to_json());
  CHECK_NOTHROW(c.validate());

  auto bad = model_json();
  bad["L_ladder"] = {2, 4, 3};
  CHECK_THROWS_AS(StudyConfig::from_json(bad).validate(), ConfigError);
  bad = model_json();
  bad["electrons_per_cell"] = 2;
  CHECK_THROWS_AS(StudyConfig::from_json(bad).validate(), ConfigError);
  bad = model_json();
  bad["neutral_nu"] = bad["nu"];
  CHECK_THROWS_AS(StudyConfig::from_json(bad).validate(), ConfigError);
  bad = model_json();
  bad["L_ladder"] = {1, 2, 3};
  CHECK_THROWS_AS(StudyConfig::from_json(bad).validate(), ConfigError);
  bad = model_json();
  bad.erase("lattice");
  CHECK_THROWS_AS(StudyConfig::from_json(bad), ConfigError);
  CHECK_THROWS_AS(pipeline_from_string("quadratic"), ConfigError);
  CHECK(pipeline_from_string("both") == Pipeline::both);
}

TEST_CASE("CSV output is deterministic and numbers round trip") {
  for (double x : {0.1, -1.0 / 3, 6.02214076e23, 1e-300}) CHECK(std::stod(csv_number(x)) == x);
  CHECK(csv_number(std::nan("")) == "nan");
  CsvTable t({"L", "value"});
  t.row({csv_number(2), csv_number(0.25)});
  CHECK(t.str() == "L,value\n2,0.25\n");
  CHECK_THROWS_AS(t.row({"1"}), InvalidSizeError);
}

TEST_CASE("small quadratic study: report consistency and deterministic outputs") {
  StudyConfig c = StudyConfig::from_json(model_json());
  StudyResult r = run_study(c);
  REQUIRE(r.reports.size() == 1);
  const ConvergenceReport& rep = r.reports[0];
  const StudyConstants& k = r.constants;
  CHECK(k.isotropic_cubic);
  CHECK(k.charge == doctest::Approx(0.2));
  REQUIRE(k.madelung.has_value());
  CHECK(k.a == doctest::Approx(-2 * pi * pi * *k.madelung / (k.epsilon * c.geometry.bz_volume)).epsilon(1e-6));
  CHECK(k.predicted_slope == doctest::Approx(-2 * pi * k.a * 0.04 / c.geometry.cell_volume).epsilon(1e-12));
  for (std::size_t i = 0; i < rep.Ls.size(); ++i)
    CHECK(rep.corrected[i] == doctest::Approx(rep.values[i] - k.predicted_slope / rep.Ls[i]).epsilon(1e-12));
  CHECK(rep.deviation == doctest::Approx(std::abs(rep.fit.slope - k.predicted_slope) / std::abs(k.predicted_slope)));

  auto dir = std::filesystem::temp_directory_path() / "supercorr_study_test";
  std::filesystem::remove_all(dir);
  write_study_outputs(r, (dir / "a").string());
  write_study_outputs(r, (dir / "b").string());
  for (const char* f : {"report.json", "ladder.csv", "constants.csv"})
    CHECK(slurp((dir / "a" / f).string()) == slurp((dir / "b" / f).string()));
  std::string ladder = slurp((dir / "a" / "ladder.csv").string());
  CHECK(ladder.rfind("pipeline,L,value,corrected_value,fitted_value,fit_residual,linear_term\n", 0) == 0);
  nlohmann::json rj = read_json_file((dir / "a" / "report.json").string());
  CHECK(rj.at("reports").size() == 1);
  std::filesystem::remove_all(dir);
}
