#include "fpme/steady.hpp"

#include "fpme/energy.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace fpme {

namespace {

void check_params(double s, double lambda) {
  if (!(s > 0.0 && s < 1.0)) throw Error(Errc::OutOfRange, "s must lie in (0,1)");
  if (!(lambda > 0.0)) throw Error(Errc::NonPositive, "lambda must be positive");
}

double mass_coefficient(double s, double lambda) {
  const double g = std::tgamma(1.5 - s);
  return std::pow(2.0, 2.0 * s) * std::sqrt(std::numbers::pi) * std::tgamma(1.5) * lambda / ((3.0 - 2.0 * s) * g * g);
}

}  // namespace

double BarenblattProfile::operator()(double x) const {
  const double d = R * R - (x - x0) * (x - x0);
  return d > 0.0 ? K * std::pow(d, 1.0 - s) : 0.0;
}

double barenblatt_prefactor(double s, double lambda) {
  check_params(s, lambda);
  return std::pow(2.0, 2.0 * s - 1.0) * std::tgamma(1.5) * lambda / (std::tgamma(2.0 - s) * std::tgamma(1.5 - s));
}

double mass_of_radius(double s, double lambda, double R) {
  check_params(s, lambda);
  if (!(R > 0.0)) throw Error(Errc::NonPositive, "radius must be positive");
  return mass_coefficient(s, lambda) * std::pow(R, 3.0 - 2.0 * s);
}

double radius_of_mass(double s, double lambda, double M) {
  check_params(s, lambda);
  if (!(M > 0.0)) throw Error(Errc::NonPositive, "mass must be positive");
  return std::pow(M / mass_coefficient(s, lambda), 1.0 / (3.0 - 2.0 * s));
}

BarenblattProfile barenblatt(double s, double lambda, SupportSize size, double x0) {
  check_params(s, lambda);
  BarenblattProfile p;
  p.s = s;
  p.lambda = lambda;
  p.x0 = x0;
  p.K = barenblatt_prefactor(s, lambda);
  if (size.kind == SupportSize::mass) {
    p.M = size.value;
    p.R = radius_of_mass(s, lambda, size.value);
  } else {
    p.R = size.value;
    p.M = mass_of_radius(s, lambda, size.value);
  }
  return p;
}

GridDensity sample(const BarenblattProfile& p, const Grid& g) {
  Vec v(g.n);
  for (Index i = 0; i < g.n; ++i) v[i] = p(g.x(i));
  return GridDensity(g, v);
}

double closed_form_potential(const BarenblattProfile& p, double x) {
  if (!(p.s < 0.5)) throw Error(Errc::OutOfRange, "closed-form potential needs s < 1/2");
  const double y = x - p.x0;
  if (std::abs(y) > p.R) throw Error(Errc::OutsideSupport, "closed-form potential holds on the support only");
  return 0.5 * p.lambda * (p.R * p.R / (1.0 - 2.0 * p.s) - y * y);
}

double closed_form_potential_unit(const BarenblattProfile& p, double x) {
  return closed_form_potential(p, x) / p.K;
}

double c_star(const BarenblattProfile& p) {
  if (!(p.s < 0.5)) throw Error(Errc::OutOfRange, "closed-form potential needs s < 1/2");
  return 0.5 * p.lambda * p.R * p.R / (1.0 - 2.0 * p.s);
}

double steady_energy_exact(const BarenblattProfile& p) {
  if (!(p.s < 0.5)) throw Error(Errc::OutOfRange, "steady energy needs s < 1/2");
  const double s = p.s, R = p.R, M = p.M;
  const double beta = std::tgamma(1.5) * std::tgamma(2.0 - s) / std::tgamma(3.5 - s);
  const double m2c = p.K * std::pow(R, 5.0 - 2.0 * s) * beta;
  return p.lambda * R * R * M / (4.0 * (1.0 - 2.0 * s)) + 0.25 * p.lambda * m2c + 0.5 * p.lambda * p.x0 * p.x0 * M;
}

double steady_energy(const BarenblattProfile& p, const std::optional<Grid>& check) {
  if (!(p.s < 0.5)) throw Error(Errc::OutOfRange, "steady energy needs s < 1/2");
  boost::math::quadrature::tanh_sinh<double> ts;
  auto f = [&](double x) {
    const double y = std::clamp(x, p.x0 - p.R, p.x0 + p.R);
    return p(y) * (0.5 * closed_form_potential(p, y) + 0.5 * p.lambda * y * y);
  };
  const double a = ts.integrate(f, p.x0 - p.R, p.x0 + p.R);
  if (check) {
    const GridDensity rho = sample(p, *check);
    const double b = energy(rho, p.s, p.lambda, 0.0).total;
    if (std::abs(a - b) > 1e-3 * std::abs(a))
      throw Error(Errc::Inconsistent, "closed-form and grid steady energies disagree");
  }
  return a;
}

EulerLagrangeReport euler_lagrange_check(const GridDensity& rho, double s, double lambda) {
  RieszConfig cfg;
  cfg.s = s;
  const RieszOperator op(rho.grid, cfg);
  const Vec p = op.potential(rho.values);
  const double thr = 1e-6 * rho.values.maxCoeff();
  EulerLagrangeReport r;
  double wsum = 0.0, xsum = 0.0;
  for (Index i = 0; i < rho.size(); ++i) {
    if (rho.values[i] > thr) {
      const double x = rho.grid.x(i);
      wsum += rho.values[i];
      xsum += rho.values[i] * (p[i] + 0.5 * lambda * x * x);
      ++r.support_cells;
    }
  }
  if (r.support_cells == 0) throw Error(Errc::EmptySupport, "no cell above the support threshold");
  r.C_star = xsum / wsum;
  r.min_excess_off_support = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < rho.size(); ++i) {
    const double x = rho.grid.x(i);
    const double d = p[i] + 0.5 * lambda * x * x - r.C_star;
    if (rho.values[i] > thr)
      r.max_dev_on_support = std::max(r.max_dev_on_support, std::abs(d));
    else
      r.min_excess_off_support = std::min(r.min_excess_off_support, d);
  }
  return r;
}

DiscreteMinimizer discrete_minimizer(const Grid& g, double s, double lambda, double mass) {
  check_params(s, lambda);
  const Index n = g.n;
  const double h = g.h();
  const KernelCase kc = riesz_constant(s);
  Vec w(n);
  for (Index m = 0; m < n; ++m) w[m] = potential_weight(kc, h, m);
  const double R = radius_of_mass(s, lambda, mass);
  std::vector<char> in(n);
  for (Index i = 0; i < n; ++i) in[i] = std::abs(g.x(i)) < R;

  Vec q(n);
  for (Index i = 0; i < n; ++i) q[i] = -0.5 * lambda * g.x(i) * g.x(i);

  for (int it = 1; it <= 200; ++it) {
    std::vector<Index> idx;
    for (Index i = 0; i < n; ++i)
      if (in[i]) idx.push_back(i);
    if (idx.empty()) throw Error(Errc::EmptySupport, "active set emptied");
    const Index m = static_cast<Index>(idx.size());
    Eigen::MatrixXd A(m, m);
    for (Index a = 0; a < m; ++a)
      for (Index b = 0; b < m; ++b) A(a, b) = w[std::abs(idx[a] - idx[b])];
    Eigen::MatrixXd rhs(m, 2);
    for (Index a = 0; a < m; ++a) {
      rhs(a, 0) = 1.0;
      rhs(a, 1) = q[idx[a]];
    }
    Eigen::MatrixXd sol;
    if (s < 0.5) {
      Eigen::LLT<Eigen::MatrixXd> llt(A);
      if (llt.info() == Eigen::Success)
        sol = llt.solve(rhs);
      else
        sol = A.partialPivLu().solve(rhs);
    } else {
      sol = A.partialPivLu().solve(rhs);
    }
    const double C = (mass / h - sol.col(1).sum()) / sol.col(0).sum();
    Vec rho = Vec::Zero(n);
    for (Index a = 0; a < m; ++a) rho[idx[a]] = sol(a, 1) + C * sol(a, 0);

    // KKT: ρ >= 0 on the set, ξ >= C off it
    const Vec p = Toeplitz([&] {
      Vec t(2 * n - 1);
      for (Index k = 0; k < n; ++k) t[n - 1 + k] = t[n - 1 - k] = w[k];
      return t;
    }(), n, n, false).apply(rho);
    bool changed = false;
    const double tol = 1e-13 * std::max(1.0, std::abs(C));
    for (Index i = 0; i < n; ++i) {
      if (in[i] && rho[i] < 0.0) {
        in[i] = 0;
        changed = true;
      } else if (!in[i] && p[i] - q[i] - C < -tol) {
        in[i] = 1;
        changed = true;
      }
    }
    if (!changed) {
      DiscreteMinimizer out;
      out.rho = GridDensity(g, rho);
      out.C = C;
      out.iterations = it;
      return out;
    }
  }
  throw Error(Errc::NotConverged, "active-set iteration did not settle");
}

}  // namespace fpme
