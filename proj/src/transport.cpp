#include "fpme/transport.hpp"

#include "fpme/riesz.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fpme {

namespace {

void check_eps(double eps, double lambda) {
  if (eps < 0.0 || (eps > 0.0 && !(eps < lambda / (2.0 * std::numbers::pi))))
    throw Error(Errc::EpsilonOutOfRange, "eps must satisfy 0 <= eps < lambda/(2 pi)");
}

struct Segments {
  const Vec& F;
  double x_min, h;
  Index n;
  Index next(Index i, double q) const {
    while (i < n && F[i + 1] <= q) ++i;
    return i;
  }
  double at(Index i, double q) const {
    const double dF = F[i + 1] - F[i];
    return x_min + (static_cast<double>(i) + (q - F[i]) / dF) * h;
  }
};

}  // namespace

double w2(const GridDensity& rho1, const GridDensity& rho2) {
  const QuantileFn Q1(rho1), Q2(rho2);
  const Segments a{Q1.edge_cdf(), rho1.grid.x_min, rho1.grid.h(), rho1.grid.n};
  const Segments b{Q2.edge_cdf(), rho2.grid.x_min, rho2.grid.h(), rho2.grid.n};
  Index i = a.next(0, 0.0), j = b.next(0, 0.0);
  double q = 0.0, acc = 0.0;
  while (i < a.n && j < b.n) {
    const double qn = std::min(a.F[i + 1], b.F[j + 1]);
    if (qn > q) {
      const double u = a.at(i, q) - b.at(j, q);
      const double v = a.at(i, qn) - b.at(j, qn);
      acc += (qn - q) * (u * u + u * v + v * v) / 3.0;
    }
    q = qn;
    i = a.next(i, q);
    j = b.next(j, q);
  }
  return std::sqrt(acc);
}

TransportPlan1D monotone_map(const GridDensity& rho1, const GridDensity& rho2) {
  const QuantileFn Q1(rho1), Q2(rho2);
  TransportPlan1D t;
  t.source = rho1;
  t.target = rho2;
  t.theta.resize(rho1.size());
  double c = 0.0;
  for (Index i = 0; i < rho1.size(); ++i) {
    t.theta[i] = Q2.quantile(Q1.cdf_center(i));
    const double d = rho1.grid.x(i) - t.theta[i];
    c += rho1.values[i] * d * d;
  }
  t.cost = rho1.grid.h() * c;
  return t;
}

TargetState make_target(const GridDensity& rho, double s, double lambda, double eps) {
  TargetState t;
  t.rho = rho;
  t.s = s;
  t.lambda = lambda;
  t.eps = eps;
  t.energy = EnergyModel(rho.grid, s, lambda, eps).energy(rho.values).total;
  return t;
}

double gap_tolerance(const InequalityReport& r) {
  return 1e-8 * std::max({1.0, std::abs(r.energy_gap), r.dissipation});
}

InequalityReport hwi_terms(const GridDensity& rho, const TargetState& target) {
  const double s = target.s, lam = target.lambda, eps = target.eps;
  check_eps(eps, lam);
  const Grid& g = rho.grid;
  const double h = g.h();
  const Index n = g.n;
  const EnergyModel em(g, s, lam, eps);
  const PotentialField f = em.potential_xi(rho.values);
  const TransportPlan1D plan = monotone_map(rho, target.rho);
  const Vec& th = plan.theta;
  const Vec& r = rho.values;

  InequalityReport rep;
  rep.s = s;
  rep.lambda = lam;
  rep.eps = eps;
  double I = 0.0, cross = 0.0;
  for (Index i = 0; i < n; ++i) {
    I += r[i] * f.dxi[i] * f.dxi[i];
    cross += r[i] * f.dxi[i] * (g.x(i) - th[i]);
  }
  I *= h;
  rep.dissipation = I;
  rep.T1 = std::sqrt(I) * std::sqrt(plan.cost) - h * cross;

  double t2 = 0.0;
  if (eps == 0.0) {
    for (Index i = 0; i < n; ++i) {
      const double x = g.x(i), t = th[i];
      t2 += r[i] * lam * (x * (x - t) - 0.5 * x * x + 0.5 * t * t - 0.5 * (x - t) * (x - t));
    }
    rep.T2 = h * t2;
  } else {
    const Vec dl = log_density_derivative(g, r);
    const Vec& q = target.rho.values;
    double a = 0.0, b = 0.0, c = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double x = g.x(i);
      a += r[i] * (eps * dl[i] + lam * x) * (th[i] - x);
      b += r[i] * (0.5 * lam * x * x + (r[i] > 0.0 ? eps * std::log(r[i]) : 0.0));
      c += q[i] * (0.5 * lam * x * x + (q[i] > 0.0 ? eps * std::log(q[i]) : 0.0));
    }
    rep.T2 = h * (-a - b + c) - 0.5 * lam * plan.cost;
  }

  // convexity remainders of the kernel along the monotone rearrangement
  const KernelCase kc = riesz_constant(s);
  auto k = [&](double z) {
    const double a = std::abs(z);
    return kc.regime == Regime::logarithmic ? -std::log(a) / std::numbers::pi : kc.c * std::pow(a, 2.0 * s - 1.0);
  };
  auto dk = [&](double z) {
    const double a = std::abs(z);
    if (kc.regime == Regime::logarithmic) return -1.0 / (std::numbers::pi * z);
    return kc.c * (2.0 * s - 1.0) * (z > 0 ? 1.0 : -1.0) * std::pow(a, 2.0 * s - 2.0);
  };
  Vec row = Vec::Zero(n);
  parallel_for(n, [&](Index i) {
    if (r[i] == 0.0) return;
    double acc = 0.0;
    const double xi = g.x(i);
    for (Index j = 0; j < n; ++j) {
      if (j == i || r[j] == 0.0) continue;
      const double dx = xi - g.x(j), dt = th[i] - th[j];
      acc += r[j] * (k(dt) - k(dx) - dk(dx) * (dt - dx));
    }
    row[i] = r[i] * acc;
  });
  double t3 = 0.0;
  for (Index i = 0; i < n; ++i) t3 += row[i];
  rep.T3 = 0.5 * h * h * t3;
  rep.w2 = std::sqrt(plan.cost);
  return rep;
}

InequalityReport inequality_report(const GridDensity& rho, const TargetState& target) {
  InequalityReport rep = hwi_terms(rho, target);
  const double s = target.s, lam = target.lambda, eps = target.eps;
  const EnergyModel em(rho.grid, s, lam, eps);
  const double E = em.energy(rho.values).total;
  rep.energy_gap = E - target.energy;
  rep.w2 = w2(rho, target.rho);
  const double I = rep.dissipation, W = rep.w2, gap = rep.energy_gap;
  rep.hwi_gap = std::sqrt(I) * W - 0.5 * lam * W * W - gap;
  rep.lsi_gap = I / (2.0 * lam) - gap;
  rep.talagrand_gap = std::sqrt(2.0 / lam * std::max(gap, 0.0)) - W;
  double gap0 = gap;
  if (eps > 0.0) {
    const EnergyModel e0(rho.grid, s, lam, 0.0);
    gap0 = e0.energy(rho.values).total - e0.energy(target.rho.values).total;
  }
  const double nsn = neg_sobolev_norm(em.riesz(), rho.values - target.rho.values);
  rep.lemmaE_gap = gap0 - 0.5 * nsn * nsn;
  rep.tolerance = gap_tolerance(rep);
  return rep;
}

double gns_ratio(const GridDensity& rho, double s) {
  if (!(s > 0.0 && s < 0.5)) throw Error(Errc::OutOfRange, "GNS ratio needs s in (0,1/2)");
  RieszConfig cfg;
  cfg.s = s;
  const RieszOperator op(rho.grid, cfg);
  const Vec p = op.potential(rho.values);
  const Vec dp = op.gradient(rho.values);
  const double h = rho.grid.h();
  double a = 0.0, d = 0.0;
  for (Index i = 0; i < rho.size(); ++i) {
    a += rho.values[i] * dp[i] * dp[i];
    d += rho.values[i] * p[i];
  }
  a *= h;
  d *= h;
  if (!(d > 0.0)) throw Error(Errc::DegenerateDenominator, "interaction energy is not positive");
  const double th = (1.0 - 2.0 * s) / (4.0 - 4.0 * s);
  return std::pow(rho.mass, 2.0 - 3.0 * th) * std::pow(a, th) / d;
}

std::array<double, 3> interp_exponents(double s, double alpha, double r) {
  if (!(s > 0.0 && s < 0.5)) throw Error(Errc::OutOfRange, "interpolation needs s in (0,1/2)");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(Errc::OutOfRange, "alpha must lie in (0,1]");
  if (!(r > 0.0)) throw Error(Errc::OutOfRange, "r must be positive");
  if (r >= 0.5 * alpha) throw Error(Errc::ParameterOrder, "need r < alpha/2");
  const double s1 = r / (s + r);
  const double s2 = s * (1.0 + 2.0 * r) / (2.0 * (1.0 + alpha) * (s + r));
  const double s3 = s * (1.0 + 2.0 * alpha - 2.0 * r) / (2.0 * (1.0 + alpha) * (s + r));
  return {s1, s2, s3};
}

InterpResult interp_inequality(const Grid& g, const Vec& u, double s, double alpha, double r) {
  InterpResult out;
  out.sigmas = interp_exponents(s, alpha, r);
  const double h = g.h();
  out.lhs = std::sqrt(h * u.squaredNorm());
  const double l1 = h * u.cwiseAbs().sum();
  const double hs = holder_seminorm(g, u, alpha);
  const double ns = neg_sobolev_norm(g, u, s);
  out.rhs_unnormalized =
      std::pow(ns, out.sigmas[0]) * std::pow(hs, out.sigmas[1]) * std::pow(l1, out.sigmas[2]);
  return out;
}

}  // namespace fpme
