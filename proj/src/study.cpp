#include "supercorr/study.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "supercorr/errors.hpp"
#include "supercorr/io.hpp"
#include "supercorr/lattice_sums.hpp"
#include "supercorr/response.hpp"
#include "supercorr/scf.hpp"

namespace supercorr {

namespace {

constexpr double kPi = std::numbers::pi;

nlohmann::json fit_to_json(const InverseLFit& f) {
  return {{"intercept", f.intercept},
          {"slope", f.slope},
          {"residual_exponent", f.residual_exponent},
          {"condition", f.condition},
          {"residuals", f.residuals}};
}

nlohmann::json mat_to_json(const Mat3& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < 3; ++i) rows.push_back({M(i, 0), M(i, 1), M(i, 2)});
  return rows;
}

int reference_L(const StudyConfig& cfg) {
  return cfg.periodic_L > 0 ? cfg.periodic_L : cfg.L_ladder.back();
}

// Periodic reference shared by the constants and the quadratic ladder.
struct Reference {
  PeriodicSolution per;
  std::shared_ptr<FiberCache> cache;
};

Reference solve_reference(const StudyConfig& cfg) {
  Reference r;
  r.per = solve_periodic(cfg.geometry, cfg.mu, cfg.scf_config(reference_L(cfg)));
  r.cache = std::make_shared<FiberCache>(r.per.bands.V0, r.per.bands.cutoff);
  return r;
}

ResponseEngine reference_engine(const StudyConfig& cfg, const Reference& r) {
  ResponseOptions o;
  o.bz_P = cfg.response_grid_P;
  return ResponseEngine(r.per.bands.V0, r.per.bands.cutoff, cfg.electrons_per_cell, r.per.state.eps_F, o, r.cache);
}

StudyConstants constants_from(const StudyConfig& cfg, const Reference& r) {
  StudyConstants c;
  c.charge = cfg.nu.charge();
  c.gap = r.per.state.gap;
  c.eps_F = r.per.state.eps_F;
  DielectricData d = reference_engine(cfg, r).dielectric();
  c.M0 = d.M_real();
  c.isotropic_cubic = d.isotropic_cubic;
  c.epsilon = d.epsilon;
  CorrectionConstant cc = correction_constant(cfg.geometry, c.M0);
  c.a = cc.a;
  c.a_error = cc.est_error;
  if (!cubic_group_recip_frac(cfg.geometry).empty())
    c.madelung = madelung(cfg.geometry, MadelungMethod::ewald).m;
  c.predicted_slope = -2 * kPi * c.a * c.charge * c.charge / cfg.geometry.cell_volume;
  return c;
}

void finish_report(ConvergenceReport& rep, const StudyConfig& cfg, const StudyConstants& c) {
  rep.predicted_slope = c.predicted_slope;
  rep.corrected.clear();
  for (std::size_t i = 0; i < rep.Ls.size(); ++i) rep.corrected.push_back(rep.values[i] - c.predicted_slope / rep.Ls[i]);
  rep.fit = fit_inverse_L(rep.values, rep.Ls, cfg.fit_noise);
  rep.corrected_fit = fit_inverse_L(rep.corrected, rep.Ls, cfg.fit_noise);
  rep.deviation = c.predicted_slope != 0 ? std::abs(rep.fit.slope - c.predicted_slope) / std::abs(c.predicted_slope)
                                         : std::abs(rep.fit.slope);
  std::size_t n = rep.values.size();
  if (n >= 2) {
    double raw = std::abs(rep.values[n - 1] - rep.values[n - 2]);
    double cor = std::abs(rep.corrected[n - 1] - rep.corrected[n - 2]);
    rep.successive_ratio = cor > 0 ? raw / cor : INFINITY;
  }
  spdlog::info("{} ladder: slope {:.6e}, predicted {:.6e}, deviation {:.4f}", rep.pipeline, rep.fit.slope,
               rep.predicted_slope, rep.deviation);
}

ConvergenceReport quadratic_ladder(const StudyConfig& cfg, const StudyConstants& c, const Reference& r) {
  ConvergenceReport rep;
  rep.pipeline = pipeline_name(Pipeline::quadratic_response);
  std::vector<SourceDensity> nus{cfg.nu};
  if (cfg.neutral_nu) nus.push_back(*cfg.neutral_nu);
  ResponseEngine engine = reference_engine(cfg, r);
  BZAverageOptions bo;
  bo.gl_order = cfg.bz_gl_order;
  std::vector<double> avg = bz_average_F(engine, nus, c.M0, bo);
  double lin = linear_defect_term(*r.per.bands.V0, cfg.nu, 1);
  for (int L : cfg.L_ladder) {
    std::vector<double> d = quadratic_energy_difference(r.per.bands.V0, r.per.bands.cutoff, cfg.electrons_per_cell,
                                                        r.per.state.eps_F, nus, L, avg, {}, r.cache);
    rep.Ls.push_back(L);
    rep.values.push_back(d[0]);
    rep.linear_terms.push_back(lin);
    if (cfg.neutral_nu) rep.neutral_values.push_back(d[1]);
    spdlog::info("quadratic L={} value {:.10e}", L, d[0]);
  }
  finish_report(rep, cfg, c);
  if (cfg.neutral_nu) {
    rep.neutral_fit = fit_inverse_L(rep.neutral_values, rep.Ls, cfg.fit_noise);
    rep.neutral_ratio = std::abs(rep.neutral_fit->slope) / std::abs(rep.fit.slope);
  }
  return rep;
}

}  // namespace

Pipeline pipeline_from_string(const std::string& s) {
  if (s == "quadratic_response") return Pipeline::quadratic_response;
  if (s == "full_scf") return Pipeline::full_scf;
  if (s == "both") return Pipeline::both;
  throw ConfigError("unknown pipeline '" + s + "'");
}

const char* pipeline_name(Pipeline p) {
  switch (p) {
    case Pipeline::quadratic_response: return "quadratic_response";
    case Pipeline::full_scf: return "full_scf";
    default: return "both";
  }
}

SCFConfig StudyConfig::scf_config(int L) const {
  SCFConfig c;
  c.alpha = mixing_alpha;
  c.anderson_depth = anderson_depth;
  c.tol = scf_tol;
  c.ecut = cutoff;
  c.smooth_from = smooth_from;
  c.L = L;
  return c;
}

void StudyConfig::validate() const {
  if (L_ladder.size() < 3) throw ConfigError("the ladder needs at least three supercell sizes");
  for (std::size_t i = 1; i < L_ladder.size(); ++i)
    if (L_ladder[i] <= L_ladder[i - 1]) throw ConfigError("L ladder must be strictly increasing");
  if (nu.kind() != SourceKind::defect) throw ConfigError("nu must be a defect source");
  if (L_ladder.front() < nu.support_L()) throw ConfigError("smallest L is below the defect support");
  if (!nu.support_fits(geometry)) throw ConfigError("nu is not contained in its declared support");
  if (neutral_nu && std::abs(neutral_nu->charge()) > 1e-10) throw ConfigError("the neutral control carries charge");
  if (electron_count(mu) != electrons_per_cell)
    throw ConfigError("electrons_per_cell differs from the charge of mu_per");
  if (response_grid_P < 1) throw ConfigError("response grid size must be positive");
  if (bz_gl_order < 2) throw ConfigError("zone average needs at least two nodes per axis");
  if (!(cutoff > 0)) throw ConfigError("cutoff must be positive");
  if (!(smooth_from > 0 && smooth_from <= 1)) throw ConfigError("kinetic smoothing start must lie in (0, 1]");
  if (!(scf_tol > 0)) throw ConfigError("SCF tolerance must be positive");
}

StudyConfig StudyConfig::from_json(const nlohmann::json& j) {
  StudyConfig c;
  try {
    auto rows = j.at("lattice").get<std::vector<double>>();
    if (rows.size() != 9) throw ConfigError("lattice needs nine numbers");
    std::array<double, 9> a{};
    std::copy(rows.begin(), rows.end(), a.begin());
    c.geometry = LatticeGeometry::from_rows(a);
    c.mu = source_from_json(j.at("mu_per"), SourceKind::periodic_nuclear);
    c.nu = source_from_json(j.at("nu"), SourceKind::defect);
    if (j.contains("neutral_nu")) c.neutral_nu = source_from_json(j.at("neutral_nu"), SourceKind::defect);
    c.electrons_per_cell = j.at("electrons_per_cell").get<int>();
    const auto& cut = j.at("cutoff");
    if (cut.is_object()) {
      c.cutoff = cut.at("ecut").get<double>();
      c.smooth_from = cut.value("smooth_from", 1.0);
    } else {
      c.cutoff = cut.get<double>();
    }
    c.L_ladder = j.at("L_ladder").get<std::vector<int>>();
    c.pipeline = pipeline_from_string(j.value("pipeline", std::string("quadratic_response")));
    c.response_grid_P = j.value("response_grid_P", 8);
    c.bz_gl_order = j.value("bz_gl_order", 6);
    c.periodic_L = j.value("periodic_L", 0);
    if (j.contains("mixing")) {
      c.mixing_alpha = j.at("mixing").value("alpha", 0.5);
      c.anderson_depth = j.at("mixing").value("anderson_depth", 5);
    }
    if (j.contains("tolerances")) {
      c.scf_tol = j.at("tolerances").value("scf", 1e-9);
      c.fit_noise = j.at("tolerances").value("fit", 0.0);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("study config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json StudyConfig::to_json() const {
  auto r = geometry.rows();
  nlohmann::json j = {{"lattice", std::vector<double>(r.begin(), r.end())},
                      {"mu_per", source_to_json(mu)},
                      {"nu", source_to_json(nu)},
                      {"electrons_per_cell", electrons_per_cell},
                      {"cutoff", {{"ecut", cutoff}, {"smooth_from", smooth_from}}},
                      {"L_ladder", L_ladder},
                      {"pipeline", pipeline_name(pipeline)},
                      {"response_grid_P", response_grid_P},
                      {"bz_gl_order", bz_gl_order},
                      {"periodic_L", periodic_L},
                      {"mixing", {{"alpha", mixing_alpha}, {"anderson_depth", anderson_depth}}},
                      {"tolerances", {{"scf", scf_tol}, {"fit", fit_noise}}}};
  if (neutral_nu) j["neutral_nu"] = source_to_json(*neutral_nu);
  return j;
}

nlohmann::json StudyConstants::to_json() const {
  nlohmann::json j = {{"charge", charge},
                      {"M0", mat_to_json(M0)},
                      {"isotropic_cubic", isotropic_cubic},
                      {"epsilon", epsilon},
                      {"a", a},
                      {"a_est_error", a_error},
                      {"gap", gap},
                      {"eps_F", eps_F},
                      {"predicted_slope", predicted_slope}};
  j["madelung"] = madelung ? nlohmann::json(*madelung) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json ConvergenceReport::to_json() const {
  nlohmann::json j = {{"pipeline", pipeline},
                      {"L", Ls},
                      {"values", values},
                      {"corrected", corrected},
                      {"fit", fit_to_json(fit)},
                      {"corrected_fit", fit_to_json(corrected_fit)},
                      {"predicted_slope", predicted_slope},
                      {"deviation", deviation},
                      {"linear_terms", linear_terms},
                      {"successive_ratio", successive_ratio}};
  if (neutral_fit) {
    j["neutral_values"] = neutral_values;
    j["neutral_fit"] = fit_to_json(*neutral_fit);
    j["neutral_ratio"] = neutral_ratio;
  }
  if (!occupied_defect.empty()) {
    j["occupied_defect"] = occupied_defect;
    j["occupied_periodic"] = occupied_periodic;
    j["margins"] = margins;
    j["gaps"] = gaps;
  }
  return j;
}

nlohmann::json RemainderModel::to_json() const {
  return {{"cubic", cubic}, {"inverse_cube", inverse_cube}, {"exponential", exponential}, {"alpha", alpha}};
}

RemainderModel fit_remainder(const std::vector<int>& Ls, const std::vector<double>& residuals) {
  if (Ls.size() != residuals.size()) throw DomainError("one residual per L expected");
  RemainderModel m;
  long n = long(Ls.size());
  if (n < 3) return m;
  Eigen::VectorXd y(n);
  for (long i = 0; i < n; ++i) y[i] = residuals[std::size_t(i)];
  double best = INFINITY;
  for (double alpha = 0.1; alpha <= 5.0 + 1e-12; alpha += 0.05) {
    Eigen::MatrixXd B(n, 2);
    for (long i = 0; i < n; ++i) {
      double L = Ls[std::size_t(i)];
      B(i, 0) = std::pow(L, -3.0);
      B(i, 1) = std::exp(-alpha * L);
    }
    Eigen::Vector2d c = B.colPivHouseholderQr().solve(y);
    double r = (y - B * c).norm();
    if (r < best) {
      best = r;
      m.inverse_cube = c[0];
      m.exponential = c[1];
      m.alpha = alpha;
    }
  }
  return m;
}

double cubic_scaling_coefficient(const std::vector<double>& ts, const std::vector<double>& values) {
  if (ts.size() != values.size() || ts.size() < 3) throw RankDeficientError("cubic scaling needs three scalings");
  long n = long(ts.size());
  Eigen::MatrixXd A(n, 3);
  Eigen::VectorXd y(n);
  for (long i = 0; i < n; ++i) {
    double t = ts[std::size_t(i)];
    A(i, 0) = t;
    A(i, 1) = t * t;
    A(i, 2) = t * t * t;
    y[i] = values[std::size_t(i)];
  }
  Eigen::FullPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < 3) throw RankDeficientError("scalings must be distinct and nonzero");
  return qr.solve(y)[2];
}

StudyConstants study_constants(const StudyConfig& cfg) {
  cfg.validate();
  return constants_from(cfg, solve_reference(cfg));
}

ConvergenceReport run_quadratic_study(const StudyConfig& cfg, const StudyConstants& c) {
  cfg.validate();
  return quadratic_ladder(cfg, c, solve_reference(cfg));
}

ConvergenceReport run_quadratic_study(const StudyConfig& cfg) {
  cfg.validate();
  Reference r = solve_reference(cfg);
  return quadratic_ladder(cfg, constants_from(cfg, r), r);
}

ConvergenceReport run_scf_study(const StudyConfig& cfg, const StudyConstants& c) {
  cfg.validate();
  ConvergenceReport rep;
  rep.pipeline = pipeline_name(Pipeline::full_scf);
  for (int L : cfg.L_ladder) {
    SCFConfig sc = cfg.scf_config(L);
    PeriodicSolution per = solve_periodic(cfg.geometry, cfg.mu, sc);
    GroundState def = solve_defect(cfg.geometry, cfg.mu, cfg.nu, per, sc);
    DefectEnergy e = defect_energy(per, def);
    rep.Ls.push_back(L);
    rep.values.push_back(e.J);
    rep.linear_terms.push_back(linear_defect_term(per.state.V, cfg.nu, L));
    rep.occupied_defect.push_back(e.occupied_defect);
    rep.occupied_periodic.push_back(e.occupied_periodic);
    double m = INFINITY;
    for (const auto& it : def.trace) m = std::min(m, it.margin);
    rep.margins.push_back(m);
    rep.gaps.push_back(per.state.gap);
    spdlog::info("scf L={} J {:.10e} ({} iterations)", L, e.J, def.trace.size());
  }
  finish_report(rep, cfg, c);
  return rep;
}

ConvergenceReport run_scf_study(const StudyConfig& cfg) { return run_scf_study(cfg, study_constants(cfg)); }

StudyResult run_study(const StudyConfig& cfg) {
  cfg.validate();
  StudyResult out;
  out.config = cfg;
  Reference r = solve_reference(cfg);
  out.constants = constants_from(cfg, r);
  if (cfg.pipeline != Pipeline::full_scf) out.reports.push_back(quadratic_ladder(cfg, out.constants, r));
  if (cfg.pipeline != Pipeline::quadratic_response) out.reports.push_back(run_scf_study(cfg, out.constants));
  return out;
}

void write_study_outputs(const StudyResult& r, const std::string& dir) {
  ensure_directory(dir);
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& rep : r.reports) reports.push_back(rep.to_json());
  write_json_file(dir + "/report.json",
                  {{"config", r.config.to_json()}, {"constants", r.constants.to_json()}, {"reports", reports}});

  CsvTable ladder({"pipeline", "L", "value", "corrected_value", "fitted_value", "fit_residual", "linear_term"});
  for (const auto& rep : r.reports)
    for (std::size_t i = 0; i < rep.Ls.size(); ++i) {
      double fitted = rep.fit.intercept + rep.fit.slope / rep.Ls[i];
      ladder.row({rep.pipeline, csv_number(rep.Ls[i]), csv_number(rep.values[i]), csv_number(rep.corrected[i]),
                  csv_number(fitted), csv_number(rep.fit.residuals[i]), csv_number(rep.linear_terms[i])});
    }
  write_text_file(dir + "/ladder.csv", ladder.str());

  const StudyConstants& c = r.constants;
  CsvTable consts({"name", "value"});
  if (c.madelung) consts.row({"madelung", csv_number(*c.madelung)});
  consts.row({"a", csv_number(c.a)});
  if (c.isotropic_cubic) consts.row({"epsilon", csv_number(c.epsilon)});
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) consts.row({"M0_" + std::to_string(i) + std::to_string(k), csv_number(c.M0(i, k))});
  consts.row({"charge", csv_number(c.charge)});
  consts.row({"predicted_slope", csv_number(c.predicted_slope)});
  consts.row({"gap", csv_number(c.gap)});
  write_text_file(dir + "/constants.csv", consts.str());
}

}  // namespace supercorr
