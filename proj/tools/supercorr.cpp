#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cmath>
#include <iostream>
#include <numbers>

#include "supercorr/errors.hpp"
#include "supercorr/io.hpp"
#include "supercorr/lattice_sums.hpp"
#include "supercorr/response.hpp"
#include "supercorr/scf.hpp"
#include "supercorr/study.hpp"

using namespace supercorr;

namespace {

LatticeGeometry lattice_from(const std::vector<double>& rows, double cubic) {
  if (rows.empty()) return LatticeGeometry::cubic(cubic);
  if (rows.size() != 9) throw ConfigError("--lattice needs nine numbers (rows a1, a2, a3)");
  std::array<double, 9> a{};
  std::copy(rows.begin(), rows.end(), a.begin());
  return LatticeGeometry::from_rows(a);
}

nlohmann::json real_rows(const Mat3& M) {
  nlohmann::json j = nlohmann::json::array();
  for (int i = 0; i < 3; ++i) j.push_back({M(i, 0), M(i, 1), M(i, 2)});
  return j;
}

nlohmann::json complex_rows(const Eigen::Matrix3cd& M) {
  return {{"real", real_rows(M.real())}, {"imag", real_rows(M.imag())}};
}

void emit(const nlohmann::json& j, const std::string& out) {
  if (out.empty())
    std::cout << j.dump(2) << "\n";
  else
    write_json_file(out, j);
}

void write_riemann_csv(const RiemannReport& r, const std::string& kind, const std::string& path) {
  CsvTable t({"L", "value", "error", "fitted_error", "rate", "r_squared"});
  for (std::size_t i = 0; i < r.Ls.size(); ++i) {
    double L = r.Ls[i];
    double fitted = 0;
    if (kind == "exponential")
      fitted = std::pow(10.0, std::log10(r.errors.front()) + r.rate * (L - r.Ls.front()));
    else
      fitted = std::abs(r.errors.front()) * std::pow(L / r.Ls.front(), -r.rate);
    t.row({csv_number(r.Ls[i]), csv_number(r.values[i]), csv_number(r.errors[i]), csv_number(fitted),
           csv_number(r.rate), csv_number(r.r_squared)});
  }
  write_text_file(path, t.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Supercell finite-size corrections for charged defects in reduced Hartree-Fock crystals"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log", log_level, "log level (trace, debug, info, warn, error)");

  // defect-study
  auto* study = app.add_subcommand("defect-study", "run an L ladder and compare the 1/L slope with the prediction");
  std::string cfg_path, out_dir = "report";
  std::string pipeline_override;
  study->add_option("--config", cfg_path, "study configuration (JSON)")->required()->check(CLI::ExistingFile);
  study->add_option("--out", out_dir, "output directory");
  study->add_option("--pipeline", pipeline_override, "override: quadratic_response, full_scf or both");

  // dielectric
  auto* diel = app.add_subcommand("dielectric", "macroscopic dielectric matrix of the periodic crystal");
  std::string diel_cfg, diel_out;
  int diel_L = 4;
  diel->add_option("--config", diel_cfg, "study configuration (JSON); crystal, cutoff and response grid are used")
      ->required()
      ->check(CLI::ExistingFile);
  diel->add_option("--L", diel_L, "grid of the periodic ground state");
  diel->add_option("--out", diel_out, "write JSON here instead of stdout");

  // scf
  auto* scf = app.add_subcommand("scf", "periodic (and optionally defect) ground state as a JSON dump");
  std::string scf_cfg, scf_out;
  int scf_L = 2;
  bool scf_defect = false;
  scf->add_option("--config", scf_cfg, "study configuration (JSON)")->required()->check(CLI::ExistingFile);
  scf->add_option("--L", scf_L, "supercell size");
  scf->add_flag("--defect", scf_defect, "also solve the supercell with nu and report J");
  scf->add_option("--out", scf_out, "write JSON here instead of stdout");

  // madelung
  auto* mad = app.add_subcommand("madelung", "Madelung constant of a Bravais lattice");
  std::vector<double> mad_rows;
  double mad_cubic = 1.0;
  std::string mad_method = "both";
  mad->add_option("--lattice", mad_rows, "nine numbers, rows a1 a2 a3")->expected(9);
  mad->add_option("--cubic", mad_cubic, "simple cubic lattice constant (when --lattice is absent)");
  mad->add_option("--method", mad_method, "ewald, direct or both")
      ->check(CLI::IsMember({"ewald", "direct", "both"}));

  // alpha
  auto* alp = app.add_subcommand("alpha", "correction constant for a dielectric matrix M");
  std::vector<double> alp_rows, alp_M;
  double alp_cubic = 1.0;
  alp->add_option("--lattice", alp_rows, "nine numbers, rows a1 a2 a3")->expected(9);
  alp->add_option("--cubic", alp_cubic, "simple cubic lattice constant (when --lattice is absent)");
  alp->add_option("--M", alp_M, "nine numbers, row major; identity when absent")->expected(9);

  // riemann-suite
  auto* rs = app.add_subcommand("riemann-suite", "convergence rates of Riemann sums, written as CSV");
  std::string rs_out = "riemann";
  rs->add_option("--out", rs_out, "output directory");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (study->parsed()) {
      StudyConfig cfg = StudyConfig::from_json(read_json_file(cfg_path));
      if (!pipeline_override.empty()) cfg.pipeline = pipeline_from_string(pipeline_override);
      StudyResult r = run_study(cfg);
      write_study_outputs(r, out_dir);
      for (const auto& rep : r.reports)
        spdlog::info("{}: slope {:.6e}, predicted {:.6e}, deviation {:.2f}%", rep.pipeline, rep.fit.slope,
                     rep.predicted_slope, 100 * rep.deviation);
    } else if (diel->parsed()) {
      StudyConfig cfg = StudyConfig::from_json(read_json_file(diel_cfg));
      PeriodicSolution per = solve_periodic(cfg.geometry, cfg.mu, cfg.scf_config(diel_L));
      ResponseOptions o;
      o.bz_P = cfg.response_grid_P;
      ResponseEngine eng(per.bands, o);
      DielectricData d = eng.dielectric();
      nlohmann::json j{{"M0", complex_rows(d.M_zero)},
                       {"M1_0", complex_rows(d.M1_zero)},
                       {"isotropic_cubic", d.isotropic_cubic},
                       {"grid_P", cfg.response_grid_P},
                       {"gap", per.state.gap}};
      if (d.isotropic_cubic) j["epsilon"] = d.epsilon;
      emit(j, diel_out);
    } else if (scf->parsed()) {
      StudyConfig cfg = StudyConfig::from_json(read_json_file(scf_cfg));
      SCFConfig sc = cfg.scf_config(scf_L);
      PeriodicSolution per = solve_periodic(cfg.geometry, cfg.mu, sc);
      nlohmann::json j{{"periodic", state_to_json(per.state)}};
      if (scf_defect) {
        GroundState def = solve_defect(cfg.geometry, cfg.mu, cfg.nu, per, sc);
        DefectEnergy e = defect_energy(per, def);
        j["defect"] = state_to_json(def);
        j["J"] = e.J;
        j["occupied_defect"] = e.occupied_defect;
        j["occupied_periodic"] = e.occupied_periodic;
      }
      emit(j, scf_out);
    } else if (mad->parsed()) {
      LatticeGeometry g = lattice_from(mad_rows, mad_cubic);
      nlohmann::json j;
      if (mad_method != "direct") {
        MadelungResult m = madelung(g, MadelungMethod::ewald);
        j["ewald"] = {{"m", m.m}, {"m_prime", m.m_prime}, {"est_error", m.est_error}};
      }
      if (mad_method != "ewald") {
        MadelungResult m = madelung(g, MadelungMethod::direct_multipole);
        j["direct_multipole"] = {{"m", m.m}, {"m_prime", m.m_prime}, {"est_error", m.est_error}};
      }
      emit(j, "");
    } else if (alp->parsed()) {
      LatticeGeometry g = lattice_from(alp_rows, alp_cubic);
      Mat3 M = Mat3::Identity();
      if (!alp_M.empty())
        for (int i = 0; i < 9; ++i) M(i / 3, i % 3) = alp_M[std::size_t(i)];
      CorrectionConstant c = correction_constant(g, M);
      emit({{"a", c.a}, {"est_error", c.est_error}, {"radius", c.radius}, {"M", real_rows(M)}}, "");
    } else if (rs->parsed()) {
      ensure_directory(rs_out);
      const double pi = std::numbers::pi;
      LatticeGeometry g = LatticeGeometry::cubic(1.0);
      RiemannReport ex = rate_exponential([pi](const Vec3& f) { return std::exp(std::cos(2 * pi * f[0])); },
                                          {2, 3, 4, 5, 6, 7, 8, 9, 10}, std::cyl_bessel_i(0.0, 1.0));
      write_riemann_csv(ex, "exponential", rs_out + "/exponential.csv");
      std::vector<int> Ls{8, 12, 16, 24, 32, 48, 64};
      RiemannReport si = rate_singular(g, [](const Vec3&) { return 1.0; }, Mat3::Identity(),
                                       CutoffParams{3 * g.bz_inradius()}, Ls);
      write_riemann_csv(si, "singular", rs_out + "/singular.csv");
      double R = 3.0;
      RiemannReport so = rate_sobolev(
          g,
          [R](const Vec3& q) {
            double t = 1 - q.norm() / R;
            return t > 0 ? t * t * t * t : 0.0;
          },
          R, 4 * pi * R * R * R / 105.0 / g.bz_volume, Ls);
      write_riemann_csv(so, "sobolev", rs_out + "/sobolev.csv");
      std::cout << fmt::format("exponential: log10 slope {:.3f} (R^2 {:.4f})\n", ex.rate, ex.r_squared)
                << fmt::format("singular: 1/L coefficient {:.8f}, residual exponent {:.2f}\n", si.inverse_L_coeff,
                               si.rate)
                << fmt::format("sobolev: exponent {:.3f}\n", so.rate);
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 0;
}
