#pragma once

#include <optional>

#include "json.hpp"
#include "supercorr/bands.hpp"
#include "supercorr/sources.hpp"

namespace supercorr {

struct SCFConfig {
  double alpha = 0.5;        // mixing parameter in (0, 1]
  int anderson_depth = 0;    // 0: linear mixing
  double tol = 1e-9;         // L2 norm of rho_out - rho_in over the unit cell
  int max_iter = 200;
  double ecut = 4.0;         // orbital cutoff; densities use 4 * ecut
  double smooth_from = 1.0;  // start of the smooth kinetic edge as a fraction of ecut; 1 is sharp
  int L = 1;
  double gap_tol = 1e-8;
  double warm_theta = 0.5;   // defect warm start adds warm_theta * nu to the periodic density
  void validate() const;
  Cutoff cutoff() const { return {ecut, smooth_from}; }
};

struct IterationRecord {
  int iter = 0;
  double residual = 0;
  double eps_F = 0;
  double margin = 0;   // distance of the closest eigenvalue to eps_F
  long occupied = 0;
};

struct GroundState {
  int L = 1;
  PeriodicField nuclear;   // mu (+ nu) on the density basis
  PeriodicField rho_in;    // density defining the final Hamiltonian
  PeriodicField rho;       // density of its occupied states
  PeriodicField V;         // (rho_in - nuclear) * G, zero mean
  long occupied = 0;       // Tr gamma over the supercell
  double kinetic = 0;
  double coulomb = 0;
  double fermi_term = 0;   // -eps_F Tr gamma
  double energy = 0;
  double eps_F = 0;
  double gap = 0;
  double margin = 0;
  std::vector<IterationRecord> trace;
  bool converged = false;
};

struct PeriodicSolution {
  GroundState state;       // fields on the unit cell; energies for the supercell L Gamma
  BandStructure bands;     // fibers of the final Hamiltonian on Lambda_L
};

// Electrons per cell implied by the neutrality of mu.
int electron_count(const SourceDensity& mu);

PeriodicSolution solve_periodic(const LatticeGeometry& g, const SourceDensity& mu, const SCFConfig& cfg);

// Full supercell solve with eps_F and the gap taken from `ref` (grand canonical).
GroundState solve_defect(const LatticeGeometry& g, const SourceDensity& mu, const SourceDensity& nu,
                         const PeriodicSolution& ref, const SCFConfig& cfg,
                         std::optional<double> eps_F = std::nullopt);

struct DefectEnergy {
  int L = 1;
  double J = 0;
  double d_kinetic = 0;
  double d_coulomb = 0;
  double d_fermi = 0;
  long occupied_defect = 0;
  long occupied_periodic = 0;
  double I_defect = 0;
  double I_periodic = 0;
};

DefectEnergy defect_energy(const PeriodicSolution& per, const GroundState& def);
DefectEnergy defect_energy(const LatticeGeometry& g, const SourceDensity& mu, const SourceDensity& nu,
                           const SCFConfig& cfg);

// -\int V0 nu over the supercell, the linear part of J.
double linear_defect_term(const PeriodicField& V0_unit, const SourceDensity& nu, int L);

nlohmann::json state_to_json(const GroundState& s);

}  // namespace supercorr
