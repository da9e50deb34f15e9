#pragma once

#include "fpme/common.hpp"
#include "fpme/energy.hpp"
#include "fpme/grid.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fpme {

struct SolverConfig {
  double s = 0.25;
  double lambda = 0.4;
  double eps = 0.0;
  Grid grid = Grid::symmetric(3.0, 1024);
  double dt = 0.0;       // fixed step; 0 means adaptive cfl * stable_dt
  double cfl = 0.5;
  double t_end = 5.0;
  int snapshot_every = 50;
  bool keep_snapshots = false;
};

struct StepInfo {
  double dt = 0.0;
  double dE = 0.0;               // E_ε(ρ') - E_ε(ρ), evaluated exactly
  double face_dissipation = 0.0; // -Σ F Δξ_ε at the old state
  double clamped = 0.0;          // mass removed by clamping negative cells
};

// Conservative explicit finite volumes with zero-flux ends. Faces carry
// upwind fluxes of -Δξ/h when ε = 0 and Scharfetter-Gummel fluxes otherwise.
class FvSolver {
 public:
  explicit FvSolver(const SolverConfig& cfg);

  // Largest step keeping the update positive and linearly stable.
  double stable_dt(const Vec& rho) const;
  double stable_dt(const Vec& rho, const Vec& p) const;
  Vec step(const Vec& rho, double dt, StepInfo* info = nullptr) const;
  // Same step given the potential p of rho; returns the potential of the result in p_out.
  Vec step(const Vec& rho, const Vec& p, double dt, StepInfo* info, Vec* p_out) const;
  // -Σ F Δξ_ε: the exact semi-discrete energy decay rate.
  double face_dissipation(const Vec& rho) const;

  const SolverConfig& config() const { return cfg_; }
  const EnergyModel& model() const { return model_; }

 private:
  void fluxes(const Vec& rho, const Vec& p, Vec& F, Vec& a, Vec& b) const;
  double face_dissipation(const Vec& rho, const Vec& p, const Vec& F) const;

  SolverConfig cfg_;
  EnergyModel model_;
  Vec half_x2_;  // λx²/2
};

GridDensity fv_step(const GridDensity& rho, const SolverConfig& cfg);

struct Diagnostics {
  double t = 0.0;
  double E = 0.0, E_eps = 0.0, I = 0.0, I_eps = 0.0;
  double W2 = 0.0, L2 = 0.0, L1 = 0.0;
  double mass = 0.0, m2 = 0.0, min_rho = 0.0;
};

Diagnostics diagnose(const EnergyModel& eps_model, const EnergyModel& plain_model, const GridDensity& rho,
                     const GridDensity& target, double t);

struct Trajectory {
  std::vector<Diagnostics> diag;
  std::vector<GridDensity> snapshots;  // parallel to diag when kept
  double E_inf = 0.0;                  // E(target), ε = 0
  double E_eps_inf = 0.0;              // E_ε(target)
  // per step: time at the start of the step and |ΔE/Δt + I|/I
  std::vector<double> step_t, step_residual;
  std::size_t steps = 0;
  double max_clamped = 0.0;
};

Trajectory integrate(const SolverConfig& cfg, const GridDensity& init, const GridDensity& target);

void write_trajectory_csv(const std::string& path, const Trajectory& traj);
std::vector<Diagnostics> read_trajectory_csv(const std::string& path);

enum class DecayQuantity { energy_gap, w2, l2, l1, dissipation };

DecayQuantity parse_quantity(const std::string& name);
const char* quantity_name(DecayQuantity q);

struct DecayFit {
  DecayQuantity quantity = DecayQuantity::energy_gap;
  double rate = 0.0;        // least-squares slope of log q against t
  double bound_rate = 0.0;
  double prefactor = 0.0;
  double tol = 0.05;
  bool bound_satisfied = false;
  double worst_ratio = 0.0; // max q(t) / (prefactor e^{-bound_rate t})
  std::size_t samples = 0;
};

struct FitWindow {
  double t0 = 0.5;
  double t1 = 1e300;
};

// Envelope rates: 2λ for the energy gap, λ for W₂, λσ₁ for L², 4λσ₁/5 for L¹,
// with σ₁ = r/(s+r), α = 1-s, r = 0.45α.
double default_bound_rate(DecayQuantity q, double s, double lambda);

DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& q, FitWindow window, double bound_rate,
                   double prefactor, double tol = 0.05);
DecayFit fit_decay(const std::vector<Diagnostics>& diag, double E_inf, DecayQuantity quantity, FitWindow window,
                   double bound_rate, std::optional<double> prefactor = std::nullopt, double tol = 0.05);

enum class Direction { physical_to_self_similar, self_similar_to_physical };

struct Rescaled {
  GridDensity rho;
  double time = 0.0;
};

// ρ(t,x) = (1+τ)^α u(τ,y), x = y(1+τ)^{-β}, t = log(1+τ), α = β = 1/(3-2s).
Rescaled change_of_variables(const GridDensity& in, double time, Direction dir, double s);

struct EpsSteadyState {
  GridDensity rho;
  double t = 0.0;
  double dissipation = 0.0;
  std::size_t steps = 0;
};

EpsSteadyState steady_state_eps(const SolverConfig& cfg, const GridDensity& init, double t_max = 400.0,
                                double tol = 1e-10);

}  // namespace fpme
