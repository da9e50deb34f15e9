#include "fpme/energy.hpp"

#include <cmath>
#include <numbers>

namespace fpme {

namespace {
RieszConfig config_for(double s) {
  RieszConfig c;
  c.s = s;
  return c;
}
}  // namespace

EnergyModel::EnergyModel(const Grid& g, double s, double lambda, double eps)
    : op_(g, config_for(s)), s_(s), lambda_(lambda), eps_(eps) {
  if (!(lambda > 0.0)) throw Error(Errc::NonPositive, "lambda must be positive");
  if (!(eps >= 0.0)) throw Error(Errc::OutOfRange, "eps must be nonnegative");
}

Vec log_density_derivative(const Grid& g, const Vec& rho) {
  const Index n = rho.size();
  const double h = g.h();
  const double thr = kLogFloorRel * rho.maxCoeff();
  Vec d = Vec::Zero(n);
  for (Index i = 0; i < n; ++i) {
    if (!(rho[i] > thr)) continue;
    const bool l = i > 0 && rho[i - 1] > thr;
    const bool r = i + 1 < n && rho[i + 1] > thr;
    if (l && r)
      d[i] = (std::log(rho[i + 1]) - std::log(rho[i - 1])) / (2.0 * h);
    else if (r)
      d[i] = (std::log(rho[i + 1]) - std::log(rho[i])) / h;
    else if (l)
      d[i] = (std::log(rho[i]) - std::log(rho[i - 1])) / h;
  }
  return d;
}

PotentialField EnergyModel::potential_xi(const Vec& rho) const {
  const Grid& g = grid();
  PotentialField f;
  f.s = s_;
  f.lambda = lambda_;
  f.eps = eps_;
  f.xi = op_.potential(rho);
  f.dxi = op_.gradient(rho);
  const double thr = kLogFloorRel * rho.maxCoeff();
  for (Index i = 0; i < g.n; ++i) {
    const double x = g.x(i);
    f.xi[i] += 0.5 * lambda_ * x * x;
    f.dxi[i] += lambda_ * x;
    if (eps_ > 0.0 && rho[i] > thr) f.xi[i] += eps_ * std::log(rho[i]);
  }
  if (eps_ > 0.0) f.dxi += eps_ * log_density_derivative(g, rho);
  return f;
}

EnergyBreakdown EnergyModel::energy(const Vec& rho) const {
  const Grid& g = grid();
  const double h = g.h();
  const Vec p = op_.potential(rho);
  EnergyBreakdown e;
  double a = 0.0, b = 0.0, c = 0.0;
  for (Index i = 0; i < g.n; ++i) {
    const double x = g.x(i);
    a += rho[i] * p[i];
    b += x * x * rho[i];
    if (rho[i] > 0.0) c += rho[i] * std::log(std::max(rho[i], kLogFloor));
  }
  e.interaction = 0.5 * h * a;
  e.confinement = 0.5 * lambda_ * h * b;
  e.boltzmann = h * c;
  e.total = e.interaction + e.confinement + eps_ * e.boltzmann;
  return e;
}

double EnergyModel::dissipation(const Vec& rho) const {
  const PotentialField f = potential_xi(rho);
  double acc = 0.0;
  for (Index i = 0; i < rho.size(); ++i) acc += rho[i] * f.dxi[i] * f.dxi[i];
  return grid().h() * acc;
}

double EnergyModel::remainder_R(const Vec& rho) const {
  const Grid& g = grid();
  const Index n = g.n;
  const double h = g.h();
  const double s = s_;
  const double p = 2.0 * s - 3.0;
  Vec dxi = op_.gradient(rho);
  for (Index i = 0; i < n; ++i) dxi[i] += lambda_ * g.x(i);
  Vec kap(n);
  kap[0] = 0.0;
  for (Index m = 1; m < n; ++m) {
    const double a = (static_cast<double>(m) - 0.5) * h, b = (static_cast<double>(m) + 0.5) * h;
    kap[m] = (std::pow(b, p + 1.0) - std::pow(a, p + 1.0)) / (p + 1.0);
  }
  const double self = 2.0 * std::pow(0.5 * h, 2.0 * s) / (2.0 * s);
  Vec row(n);
  parallel_for(n, [&](Index i) {
    double acc = 0.0;
    if (rho[i] > 0.0) {
      for (Index j = 0; j < n; ++j) {
        if (j == i || rho[j] == 0.0) continue;
        const double d = dxi[i] - dxi[j];
        acc += kap[std::abs(i - j)] * rho[j] * d * d;
      }
      const double l = i > 0 ? dxi[i - 1] : dxi[i];
      const double r = i + 1 < n ? dxi[i + 1] : dxi[i];
      const double span = (i > 0 && i + 1 < n) ? 2.0 * h : h;
      const double slope = (r - l) / span;
      acc += rho[i] * slope * slope * self;
      acc *= rho[i];
    }
    row[i] = acc;
  });
  double total = 0.0;
  for (Index i = 0; i < n; ++i) total += row[i];
  const KernelCase kc = riesz_constant(s);
  const double R = 0.5 * kc.c_plus * (2.0 - 2.0 * s) * h * total;
  if (s < 0.5 && R < -1e-10 * std::max(1.0, std::abs(R)))
    throw Error(Errc::NegativeRemainder, "Bakry-Emery remainder came out negative");
  return R;
}

double boltzmann(const GridDensity& rho) {
  double c = 0.0;
  for (Index i = 0; i < rho.size(); ++i)
    if (rho.values[i] > 0.0) c += rho.values[i] * std::log(std::max(rho.values[i], kLogFloor));
  return rho.grid.h() * c;
}

PotentialField potential_xi(const GridDensity& rho, double s, double lambda, double eps) {
  return EnergyModel(rho.grid, s, lambda, eps).potential_xi(rho.values);
}
EnergyBreakdown energy(const GridDensity& rho, double s, double lambda, double eps) {
  return EnergyModel(rho.grid, s, lambda, eps).energy(rho.values);
}
double dissipation(const GridDensity& rho, double s, double lambda, double eps) {
  return EnergyModel(rho.grid, s, lambda, eps).dissipation(rho.values);
}
double remainder_R(const GridDensity& rho, double s, double lambda) {
  return EnergyModel(rho.grid, s, lambda, 0.0).remainder_R(rho.values);
}

Virial virial_check(const GridDensity& rho, double s) {
  if (!(s < 0.5)) throw Error(Errc::OutOfRange, "virial identity needs s < 1/2");
  RieszConfig cfg;
  cfg.s = s;
  const RieszOperator op(rho.grid, cfg);
  const Vec p = op.potential(rho.values);
  const Vec dp = op.gradient(rho.values);
  double a = 0.0, b = 0.0;
  for (Index i = 0; i < rho.size(); ++i) {
    a += rho.values[i] * rho.grid.x(i) * dp[i];
    b += rho.values[i] * p[i];
  }
  const double h = rho.grid.h();
  return {-2.0 * h * a, (1.0 - 2.0 * s) * h * b};
}

double gaussian_relative_entropy(const GridDensity& rho) {
  return std::numbers::pi * moment(rho, 2) + boltzmann(rho);
}

}  // namespace fpme
