#pragma once

#include "fpme/common.hpp"
#include "fpme/grid.hpp"
#include "fpme/riesz.hpp"

namespace fpme {

// Cells at or below this fraction of max ρ get no ε log ρ drift.
inline constexpr double kLogFloorRel = 1e-12;
// Only used to evaluate log; zero cells contribute 0·log 0 = 0.
inline constexpr double kLogFloor = 1e-300;

struct PotentialField {
  Vec xi;   // (-Δ)^{-s}ρ + λx²/2 + ε log ρ
  Vec dxi;  // spatial derivative; the velocity is -dxi
  double s = 0.0, lambda = 0.0, eps = 0.0;
};

struct EnergyBreakdown {
  double interaction = 0.0;
  double confinement = 0.0;
  double boltzmann = 0.0;
  double total = 0.0;
};

// All energy-type functionals on one grid, sharing one set of kernel weights.
class EnergyModel {
 public:
  EnergyModel(const Grid& g, double s, double lambda, double eps = 0.0);

  PotentialField potential_xi(const Vec& rho) const;
  EnergyBreakdown energy(const Vec& rho) const;
  double dissipation(const Vec& rho) const;
  double remainder_R(const Vec& rho) const;

  const RieszOperator& riesz() const { return op_; }
  const Grid& grid() const { return op_.grid(); }
  double s() const { return s_; }
  double lambda() const { return lambda_; }
  double eps() const { return eps_; }

 private:
  RieszOperator op_;
  double s_, lambda_, eps_;
};

double boltzmann(const GridDensity& rho);
Vec log_density_derivative(const Grid& g, const Vec& rho);

PotentialField potential_xi(const GridDensity& rho, double s, double lambda, double eps);
EnergyBreakdown energy(const GridDensity& rho, double s, double lambda, double eps);
double dissipation(const GridDensity& rho, double s, double lambda, double eps);
double remainder_R(const GridDensity& rho, double s, double lambda);

struct Virial {
  double lhs = 0.0;
  double rhs = 0.0;
};

Virial virial_check(const GridDensity& rho, double s);
double gaussian_relative_entropy(const GridDensity& rho);

}  // namespace fpme
