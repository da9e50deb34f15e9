#pragma once

#include "fpme/common.hpp"
#include "fpme/grid.hpp"
#include "fpme/riesz.hpp"

#include <optional>

namespace fpme {

// ρ_∞(x) = K (R² - (x-x0)²)_+^{1-s}
struct BarenblattProfile {
  double s = 0.25;
  double lambda = 0.4;
  double R = 1.0;
  double M = 0.0;
  double K = 0.0;
  double x0 = 0.0;

  double operator()(double x) const;
};

double barenblatt_prefactor(double s, double lambda);
double mass_of_radius(double s, double lambda, double R);
double radius_of_mass(double s, double lambda, double M);
// Self-similar confinement 1/(3-2s).
inline double self_similar_lambda(double s) { return 1.0 / (3.0 - 2.0 * s); }

struct SupportSize {
  enum Kind { mass, radius } kind = mass;
  double value = 1.0;
  static SupportSize with_mass(double m) { return {mass, m}; }
  static SupportSize with_radius(double r) { return {radius, r}; }
};

BarenblattProfile barenblatt(double s, double lambda, SupportSize size, double x0 = 0.0);
GridDensity sample(const BarenblattProfile& p, const Grid& g);

// Riesz potential of the profile itself on its support.
double closed_form_potential(const BarenblattProfile& p, double x);
// The same for the unit-amplitude profile (R² - (x-x0)²)_+^{1-s}.
double closed_form_potential_unit(const BarenblattProfile& p, double x);
double c_star(const BarenblattProfile& p);

// E(ρ_∞) by quadrature of the closed forms; with a grid, cross-checked
// against the discrete energy.
double steady_energy(const BarenblattProfile& p, const std::optional<Grid>& check = std::nullopt);
// Beta-function evaluation of the same quantity.
double steady_energy_exact(const BarenblattProfile& p);

struct EulerLagrangeReport {
  double C_star = 0.0;
  double max_dev_on_support = 0.0;
  double min_excess_off_support = 0.0;
  Index support_cells = 0;
};

EulerLagrangeReport euler_lagrange_check(const GridDensity& rho, double s, double lambda);

// Exact minimizer of the discrete energy h Σ ρ(½Wρ + λx²/2) at fixed mass,
// by an active-set iteration.
struct DiscreteMinimizer {
  GridDensity rho;
  double C = 0.0;
  int iterations = 0;
};

DiscreteMinimizer discrete_minimizer(const Grid& g, double s, double lambda, double mass = 1.0);

}  // namespace fpme
