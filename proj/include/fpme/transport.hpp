#pragma once

#include "fpme/common.hpp"
#include "fpme/energy.hpp"
#include "fpme/grid.hpp"

#include <array>

namespace fpme {

// Exact L² distance of the two piecewise-linear quantile functions.
double w2(const GridDensity& rho1, const GridDensity& rho2);

struct TransportPlan1D {
  Vec theta;  // θ(x_i) = F₂⁻¹(F₁(x_i))
  GridDensity source, target;
  double cost = 0.0;  // h Σ ρ₁ (x - θ)²
};

TransportPlan1D monotone_map(const GridDensity& rho1, const GridDensity& rho2);

// Equilibrium the inequalities are measured against, with its energy.
struct TargetState {
  GridDensity rho;
  double energy = 0.0;  // E_ε(ρ_target)
  double s = 0.25, lambda = 0.4, eps = 0.0;
};

TargetState make_target(const GridDensity& rho, double s, double lambda, double eps);

struct InequalityReport {
  double s = 0.0, lambda = 0.0, eps = 0.0;
  double energy_gap = 0.0;  // E_ε(ρ) - E_ε(ρ_target)
  double dissipation = 0.0;
  double w2 = 0.0;
  double hwi_gap = 0.0, lsi_gap = 0.0, talagrand_gap = 0.0, lemmaE_gap = 0.0;
  double T1 = 0.0, T2 = 0.0, T3 = 0.0;
  double tolerance = 0.0;  // gaps at or above -tolerance count as satisfied
};

InequalityReport hwi_terms(const GridDensity& rho, const TargetState& target);
InequalityReport inequality_report(const GridDensity& rho, const TargetState& target);
double gap_tolerance(const InequalityReport& r);

double gns_ratio(const GridDensity& rho, double s);

struct InterpResult {
  double lhs = 0.0;
  double rhs_unnormalized = 0.0;
  std::array<double, 3> sigmas{};
  double ratio() const { return lhs / rhs_unnormalized; }
};

std::array<double, 3> interp_exponents(double s, double alpha, double r);
InterpResult interp_inequality(const Grid& g, const Vec& u, double s, double alpha, double r);

}  // namespace fpme
