#include "fpme/riesz.hpp"
#include "fpme/steady.hpp"

#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <unsupported/Eigen/FFT>

using namespace fpme;
using std::numbers::pi;

namespace {

Vec bump(const Grid& g, double c, double w, double amp = 1.0) {
  Vec v = Vec::Zero(g.n);
  for (Index i = 0; i < g.n; ++i) {
    const double z = (g.x(i) - c) / w;
    if (std::abs(z) < 1.0) v[i] = amp * std::pow(1.0 - z * z, 4);
  }
  return v;
}

double rel_l2(const Vec& a, const Vec& b) { return (a - b).norm() / b.norm(); }

RieszConfig cfg_of(double s, Method m = Method::truncated_convolution) {
  RieszConfig c;
  c.s = s;
  c.method = m;
  return c;
}

}  // namespace

TEST_CASE("riesz constant against an independent gamma evaluation") {
  const double s = 0.25;
  const double ref = 0.25 / std::sqrt(2.0) * boost::math::tgamma(0.25) /
                     (boost::math::tgamma(0.5) * boost::math::tgamma(1.25));
  const KernelCase k = riesz_constant(s);
  CHECK(k.regime == Regime::power_positive);
  CHECK(k.c > 0.0);
  CHECK(k.c == doctest::Approx(ref).epsilon(1e-14));
  CHECK(k.c_plus == doctest::Approx((1.0 - 2.0 * s) * ref).epsilon(1e-14));
}

TEST_CASE("riesz constant regimes") {
  const KernelCase neg = riesz_constant(0.75);
  CHECK(neg.regime == Regime::power_negative);
  CHECK(neg.c < 0.0);
  CHECK(neg.c_plus == doctest::Approx((1.0 - 1.5) * neg.c).epsilon(1e-13));
  const KernelCase lg = riesz_constant(0.5);
  CHECK(lg.regime == Regime::logarithmic);
  CHECK(lg.c == doctest::Approx(1.0 / pi).epsilon(1e-15));
  // (1-2s)c is continuous through s = 1/2
  CHECK(riesz_constant(0.5 - 1e-7).c_plus == doctest::Approx(lg.c_plus).epsilon(1e-6));
  CHECK(riesz_constant(0.5 + 1e-7).c_plus == doctest::Approx(lg.c_plus).epsilon(1e-6));
  for (double bad : {0.0, 1.0, -0.2, 1.5}) {
    try {
      riesz_constant(bad);
      FAIL("expected OutOfRange");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::OutOfRange);
    }
  }
}

TEST_CASE("potential of zero and linearity") {
  const Grid g = Grid::symmetric(2.0, 512);
  const RieszConfig c = cfg_of(0.3);
  CHECK(riesz_potential(g, Vec::Zero(512), c).cwiseAbs().maxCoeff() == 0.0);
  const Vec a = bump(g, -0.4, 0.5), b = bump(g, 0.6, 0.3);
  const Vec lhs = riesz_potential(g, 2.0 * a - 3.0 * b, c);
  const Vec rhs = 2.0 * riesz_potential(g, a, c) - 3.0 * riesz_potential(g, b, c);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * rhs.cwiseAbs().maxCoeff());
}

TEST_CASE("fft and direct convolution agree") {
  const Grid g = Grid::symmetric(3.0, 700);
  const Vec r = bump(g, 0.2, 1.1);
  for (double s : {0.2, 0.5, 0.8}) {
    const Vec d = riesz_potential(g, r, cfg_of(s, Method::direct_quadrature));
    const Vec f = riesz_potential(g, r, cfg_of(s, Method::truncated_convolution));
    CHECK((d - f).cwiseAbs().maxCoeff() <= 1e-11 * d.cwiseAbs().maxCoeff());
    const Vec gd = riesz_gradient(g, r, cfg_of(s, Method::direct_quadrature));
    const Vec gf = riesz_gradient(g, r, cfg_of(s, Method::truncated_convolution));
    CHECK((gd - gf).cwiseAbs().maxCoeff() <= 1e-11 * gd.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("potential matches the steady closed form") {
  for (double s : {0.1, 0.25, 0.4}) {
    const auto p = barenblatt(s, 0.4, SupportSize::with_radius(1.0));
    const Grid g = Grid::symmetric(2.0, 4096);
    const Vec pot = riesz_potential(sample(p, g), cfg_of(s));
    double err = 0.0, ref = 0.0;
    for (Index i = 0; i < g.n; ++i) {
      if (std::abs(g.x(i)) > 0.9) continue;
      const double c = closed_form_potential(p, g.x(i));
      err = std::max(err, std::abs(pot[i] - c));
      ref = std::max(ref, std::abs(c));
    }
    CHECK(err / ref <= 1e-3);
  }
}

TEST_CASE("potential of two separated bumps against adaptive quadrature") {
  const double s = 0.3, w = 0.05;
  const KernelCase k = riesz_constant(s);
  const Grid g = Grid::symmetric(1.0, 4000);
  const Vec r = bump(g, -0.5, w) + bump(g, 0.5, w);
  const Vec pot = riesz_potential(g, r, cfg_of(s));
  boost::math::quadrature::tanh_sinh<double> ts;
  auto prof = [&](double y, double c) {
    const double z = (y - c) / w;
    return std::abs(z) < 1.0 ? std::pow(1.0 - z * z, 4) : 0.0;
  };
  for (double x : {-0.5, 0.5}) {
    const double sgn = x > 0 ? 1.0 : -1.0;
    auto f = [&](double y) { return k.c * std::pow(std::abs(x - y), 2 * s - 1) * (prof(y, -0.5) + prof(y, 0.5)); };
    // the singular point splits the near bump; the far bump is smooth
    const double near = ts.integrate(f, x - w, x) + ts.integrate(f, x, x + w);
    const double far = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -sgn * 0.5 - w, -sgn * 0.5 + w);
    Index i = 0;
    while (g.x(i) < x) ++i;
    const double num = 0.5 * (pot[i - 1] + pot[i]);  // x sits on a cell edge
    CHECK(num == doctest::Approx(near + far).epsilon(1e-3));
  }
}

TEST_CASE("gradient is odd for even densities") {
  const Grid g = Grid::symmetric(2.0, 1000);
  const Vec r = bump(g, 0.0, 1.2);
  for (double s : {0.25, 0.5, 0.75}) {
    const Vec d = riesz_gradient(g, r, cfg_of(s));
    double m = 0.0;
    for (Index i = 0; i < g.n; ++i) m = std::max(m, std::abs(d[i] + d[g.n - 1 - i]));
    CHECK(m <= 1e-12 * d.cwiseAbs().maxCoeff());
    CHECK(std::abs(d[g.n / 2] + d[g.n / 2 - 1]) <= 1e-12 * d.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("gradient balances confinement on the steady support") {
  const double s = 0.25, lambda = 0.4;
  const auto p = barenblatt(s, lambda, SupportSize::with_radius(1.0));
  const Grid g = Grid::symmetric(2.0, 4096);
  const Vec d = riesz_gradient(sample(p, g), cfg_of(s));
  double err = 0.0;
  for (Index i = 0; i < g.n; ++i)
    if (std::abs(g.x(i)) < 0.9) err = std::max(err, std::abs(d[i] + lambda * g.x(i)));
  CHECK(err <= 1e-3 * lambda);
}

TEST_CASE("gradient matches a centered difference of the potential") {
  for (double s : {0.25, 0.5, 0.75}) {
    double prev = 0.0;
    for (Index n : {400, 800}) {
      const Grid g = Grid::symmetric(2.0, n);
      const Vec r = bump(g, 0.1, 1.0);
      const Vec p = riesz_potential(g, r, cfg_of(s));
      const Vec d = riesz_gradient(g, r, cfg_of(s));
      Vec fd(n - 2), dd(n - 2);
      for (Index i = 1; i < n - 1; ++i) {
        fd[i - 1] = (p[i + 1] - p[i - 1]) / (2 * g.h());
        dd[i - 1] = d[i];
      }
      const double e = rel_l2(dd, fd);
      CHECK(e <= 5.0 * g.h());
      if (prev > 0) CHECK(e < prev);
      prev = e;
    }
  }
}

TEST_CASE("second derivative matches a second difference of the potential") {
  for (double s : {0.25, 0.4}) {
    const Grid g = Grid::symmetric(2.0, 1600);
    const Vec r = bump(g, 0.0, 1.0);
    const Vec p = riesz_potential(g, r, cfg_of(s));
    const Vec d2 = riesz_second_derivative(g, r, cfg_of(s));
    Vec fd(g.n - 2), dd(g.n - 2);
    for (Index i = 1; i < g.n - 1; ++i) {
      fd[i - 1] = (p[i + 1] - 2 * p[i] + p[i - 1]) / (g.h() * g.h());
      dd[i - 1] = d2[i];
    }
    CHECK(rel_l2(dd, fd) <= 10.0 * std::pow(g.h(), std::min(1.0, 2 * s)));
    double m = 0.0;
    for (Index i = 0; i < g.n; ++i) m = std::max(m, std::abs(d2[i] - d2[g.n - 1 - i]));
    CHECK(m <= 1e-10 * d2.cwiseAbs().maxCoeff());
    const Vec fl = frac_laplacian(g, r, s);
    CHECK(rel_l2(-d2, fl) <= 10.0 * std::pow(g.h(), std::min(1.0, 2 * s)));
  }
}

TEST_CASE("fractional laplacian of a constant vanishes") {
  const Grid g(0.0, 2 * pi, 256);
  const Vec c = riesz_potential(g, Vec::Zero(256), cfg_of(0.3));
  const Vec fl = frac_laplacian(g, Vec::Constant(256, 2.5), 0.3, Boundary::periodic);
  CHECK(fl.cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(c.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fractional laplacian eigenvalue on a periodic grid") {
  for (double s : {0.1, 0.25, 0.5, 0.75}) {
    for (int k : {1, 3}) {
      const double L = 2 * pi;
      const Index n = static_cast<Index>(std::ceil(k * L / (0.1 * 1.0)));
      const Grid g(0.0, L, n);
      Vec u(n);
      for (Index i = 0; i < n; ++i) u[i] = std::cos(k * g.x(i));
      const Vec fl = frac_laplacian(g, u, s, Boundary::periodic);
      const double lam = std::pow(k, 2.0 - 2.0 * s);
      CHECK((fl - lam * u).cwiseAbs().maxCoeff() <= 0.01 * lam);
    }
  }
}

TEST_CASE("negative sobolev norm") {
  const Grid g = Grid::symmetric(3.0, 1024);
  CHECK(neg_sobolev_norm(g, Vec::Zero(1024), 0.25) == 0.0);
  const Vec u = bump(g, -0.3, 0.5) - bump(g, 0.4, 0.5);
  for (double s : {0.25, 0.5, 0.75}) {
    const double a = neg_sobolev_norm(g, u, s);
    CHECK(a > 0.0);
    CHECK(neg_sobolev_norm(g, Vec(-u), s) == a);
  }
  try {
    neg_sobolev_norm(g, bump(g, 0, 1), 0.75);
    FAIL("expected OutOfRange");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::OutOfRange);
  }
}

TEST_CASE("negative sobolev norm of a Barenblatt shift against a double integral") {
  const double s = 0.25, lambda = 0.4;
  const auto p0 = barenblatt(s, lambda, SupportSize::with_mass(1.0));
  const auto p1 = barenblatt(s, lambda, SupportSize::with_mass(1.0), 0.3);
  const Grid g = Grid::symmetric(2.0, 4096);
  const Vec u = sample(p1, g).values - sample(p0, g).values;
  const double num = neg_sobolev_norm(g, u, s);
  const KernelCase k = riesz_constant(s);
  auto uf = [&](double x) { return p1(x) - p0(x); };
  const double a = -p0.R, b = p1.x0 + p1.R;
  boost::math::quadrature::tanh_sinh<double> ts(8);
  auto inner = [&](double x) {
    auto f = [&](double y) { return y == x ? 0.0 : std::pow(std::abs(x - y), 2 * s - 1) * uf(y); };
    double acc = 0.0;
    // split at the singular point and at the profile edges inside (a,b)
    std::vector<double> cuts{a, x, p0.R, p1.x0 - p1.R, b};
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
      if (cuts[i + 1] > cuts[i]) acc += ts.integrate(f, cuts[i], cuts[i + 1]);
    return uf(x) * acc;
  };
  double outer = 0.0;
  const double cuts[] = {a, p1.x0 - p1.R, p0.R, b};
  for (int i = 0; i < 3; ++i)
    outer += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(inner, cuts[i], cuts[i + 1], 8, 1e-9);
  CHECK(num == doctest::Approx(std::sqrt(k.c * outer)).epsilon(1e-3));
}

TEST_CASE("quadratic form is nonnegative on zero-mass corpus differences") {
  const Grid g = Grid::symmetric(4.0, 512);
  for (double s : {0.25, 0.5, 0.75}) {
    RieszOperator op(g, cfg_of(s));
    for (std::uint64_t sd = 1; sd <= 30; ++sd) {
      const Vec u = random_density(corpus_spec(sd), g).values - random_density(corpus_spec(sd + 100), g).values;
      const double l1 = g.h() * u.cwiseAbs().sum();
      CHECK(op.quadratic_form(u) >= -1e-10 * l1 * l1);
      CHECK_NOTHROW(neg_sobolev_norm(op, u));
    }
  }
}

TEST_CASE("hdot seminorm against the Fourier side") {
  CHECK(hdot_seminorm(Grid::symmetric(1.0, 64), Vec::Zero(64), 0.2) == 0.0);
  for (double r : {0.1, 0.2, 0.3, 0.45}) {
    const Grid g = Grid::symmetric(12.0, 2048);
    Vec u(g.n);
    for (Index i = 0; i < g.n; ++i) u[i] = std::exp(-g.x(i) * g.x(i));
    const double direct = hdot_seminorm(g, u, r);
    // e^{-x²} has |û|² = π e^{-ξ²/2}, so (1/2π)∫|û|²|ξ|^{2r} = 2^{r-1/2}Γ(r+1/2)
    const double exact = std::sqrt(std::pow(2.0, r - 0.5) * boost::math::tgamma(r + 0.5));
    CHECK(direct == doctest::Approx(exact).epsilon(0.02));
    // discrete Fourier transform on a wide periodic window
    const Index N = 1 << 14;
    const double L = 200.0, dx = L / N;
    std::vector<double> v(N);
    for (Index i = 0; i < N; ++i) {
      const double x = -L / 2 + i * dx;
      v[i] = std::exp(-x * x);
    }
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> V;
    fft.fwd(V, v);
    double acc = 0.0;
    for (Index k = 0; k < N; ++k) {
      const Index kk = k <= N / 2 ? k : k - N;
      const double xi = 2 * pi * kk / L;
      acc += std::norm(V[k] * dx) * std::pow(std::abs(xi), 2 * r);
    }
    const double dft = std::sqrt(acc * (2 * pi / L) / (2 * pi));
    CHECK(direct == doctest::Approx(dft).epsilon(0.02));
  }
}

TEST_CASE("operators do not depend on the thread count") {
  const Grid g = Grid::symmetric(3.0, 1500);
  const Vec r = bump(g, 0.3, 1.0);
  set_num_threads(1);
  const Vec a = riesz_potential(g, r, cfg_of(0.3, Method::direct_quadrature));
  const Vec fa = frac_laplacian(g, r, 0.3);
  const double ha = hdot_seminorm(g, r, 0.2);
  set_num_threads(4);
  const Vec b = riesz_potential(g, r, cfg_of(0.3, Method::direct_quadrature));
  const Vec fb = frac_laplacian(g, r, 0.3);
  const double hb = hdot_seminorm(g, r, 0.2);
  set_num_threads(1);
  CHECK((a.array() == b.array()).all());
  CHECK((fa.array() == fb.array()).all());
  CHECK(ha == hb);
}
