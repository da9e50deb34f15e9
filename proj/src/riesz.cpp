#include "fpme/riesz.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fpme {

namespace {

constexpr double kPi = std::numbers::pi;

void check_order(double s) {
  if (!(s > 0.0 && s < 1.0)) throw Error(Errc::OutOfRange, "fractional order s must lie in (0,1)");
}

// ∫_a^b z^p dz for 0 <= a < b, p > -1 unless a > 0.
long double power_integral(long double a, long double b, long double p) {
  if (std::abs(p + 1.0L) < 1e-15L) return std::log(b / a);
  return (std::pow(b, p + 1.0L) - (a > 0 ? std::pow(a, p + 1.0L) : 0.0L)) / (p + 1.0L);
}

// Moments ∫_cell |z|^p (z - mh)^k dz, k = 0,1,2, over cell m != 0.
struct CellMoments {
  double k0, k1, k2;
};

CellMoments cell_moments(double h, Index m, double p) {
  const long double am = std::abs(static_cast<long double>(m));
  const long double a = (am - 0.5L) * h, b = (am + 0.5L) * h, c = am * h;
  const long double i0 = power_integral(a, b, p);
  const long double i1 = power_integral(a, b, p + 1.0L);
  const long double i2 = power_integral(a, b, p + 2.0L);
  const long double k1 = i1 - c * i0;
  const long double k2 = i2 - 2.0L * c * i1 + c * c * i0;
  const double sg = m > 0 ? 1.0 : -1.0;
  return {static_cast<double>(i0), sg * static_cast<double>(k1), static_cast<double>(k2)};
}

Vec centered_first(const Vec& u, double h, bool periodic) {
  const Index n = u.size();
  Vec d(n);
  for (Index i = 0; i < n; ++i) {
    const double l = i > 0 ? u[i - 1] : (periodic ? u[n - 1] : 0.0);
    const double r = i + 1 < n ? u[i + 1] : (periodic ? u[0] : 0.0);
    d[i] = (r - l) / (2.0 * h);
  }
  return d;
}

Vec centered_second(const Vec& u, double h, bool periodic) {
  const Index n = u.size();
  Vec d(n);
  for (Index i = 0; i < n; ++i) {
    const double l = i > 0 ? u[i - 1] : (periodic ? u[n - 1] : 0.0);
    const double r = i + 1 < n ? u[i + 1] : (periodic ? u[0] : 0.0);
    d[i] = (r - 2.0 * u[i] + l) / (h * h);
  }
  return d;
}

}  // namespace

KernelCase riesz_constant(double s) {
  check_order(s);
  KernelCase k;
  k.s = s;
  // (1-2s)Γ(1/2-s) = 2Γ(3/2-s) keeps c_plus finite through s = 1/2
  k.c_plus = 2.0 * s * std::pow(2.0, -2.0 * s) * std::tgamma(1.5 - s) / (std::sqrt(kPi) * std::tgamma(1.0 + s));
  if (s == 0.5) {
    k.regime = Regime::logarithmic;
    k.c = 1.0 / kPi;
  } else {
    k.regime = s < 0.5 ? Regime::power_positive : Regime::power_negative;
    k.c = s * std::pow(2.0, -2.0 * s) * std::tgamma(0.5 - s) / (std::sqrt(kPi) * std::tgamma(1.0 + s));
  }
  return k;
}

double sobolev_constant(double r) {
  return r * std::pow(4.0, r) * std::tgamma(0.5 + r) / (std::sqrt(kPi) * std::tgamma(1.0 - r));
}

Toeplitz::Toeplitz(Vec taps, Index n_out, Index n_in, bool use_fft)
    : taps_(std::move(taps)), n_out_(n_out), n_in_(n_in), fft_(use_fft) {
  if (taps_.size() != n_out + n_in - 1) throw Error(Errc::OutOfRange, "Toeplitz tap count mismatch");
  if (!fft_) return;
  N_ = n_out + n_in;
  if (N_ % 2) ++N_;
  std::vector<double> a(N_, 0.0);
  for (Index k = 0; k < taps_.size(); ++k) {
    const Index m = k - (n_in - 1);
    a[(m % N_ + N_) % N_] = taps_[k];
  }
  plan_ = std::make_shared<Eigen::FFT<double>>();
  plan_->fwd(spec_, a);
}

Vec Toeplitz::apply(const Vec& x) const {
  if (x.size() != n_in_) throw Error(Errc::OutOfRange, "Toeplitz input size mismatch");
  Vec y(n_out_);
  if (!fft_) {
    for (Index i = 0; i < n_out_; ++i) {
      double acc = 0.0;
      const double* t = taps_.data() + i + n_in_ - 1;  // t[-j] is offset i-j
      for (Index j = 0; j < n_in_; ++j) acc += t[-j] * x[j];
      y[i] = acc;
    }
    return y;
  }
  std::vector<double> b(N_, 0.0);
  for (Index j = 0; j < n_in_; ++j) b[j] = x[j];
  std::vector<std::complex<double>> B;
  plan_->fwd(B, b);
  for (std::size_t k = 0; k < B.size(); ++k) B[k] *= spec_[k];
  std::vector<double> out;
  plan_->inv(out, B);
  for (Index i = 0; i < n_out_; ++i) y[i] = out[i];
  return y;
}

double kernel_antiderivative(const KernelCase& k, double z) {
  if (z == 0.0) return 0.0;
  if (k.regime == Regime::logarithmic) return -(z * std::log(std::abs(z)) - z) / kPi;
  const double sg = z > 0 ? 1.0 : -1.0;
  return k.c * sg * std::pow(std::abs(z), 2.0 * k.s) / (2.0 * k.s);
}

double potential_weight(const KernelCase& k, double h, Index m) {
  const double mm = static_cast<double>(m);
  return kernel_antiderivative(k, (mm + 0.5) * h) - kernel_antiderivative(k, (mm - 0.5) * h);
}

RieszOperator::RieszOperator(const Grid& g, const RieszConfig& cfg)
    : grid_(g), cfg_(cfg), kernel_(riesz_constant(cfg.s)) {
  if (cfg.singularity_radius < 1) throw Error(Errc::OutOfRange, "singularity_radius must be >= 1");
  const Index n = g.n;
  const double h = g.h();
  const bool fft = cfg.method == Method::truncated_convolution;
  Vec w(2 * n - 1);
  for (Index m = 0; m < n; ++m) w[n - 1 + m] = w[n - 1 - m] = potential_weight(kernel_, h, m);
  double alt = 0.0;
  for (Index m = -(n - 1); m <= n - 1; ++m) alt += ((m % 2) ? -1.0 : 1.0) * w[n - 1 + m];
  nyquist_ = std::abs(alt);
  pot_ = Toeplitz(std::move(w), n, n, fft);
  // segment j joins nodes j-1 and j; offsets i-j run over [-n, n-1]
  Vec gt(2 * n);
  for (Index m = -n; m <= n - 1; ++m) {
    const double mm = static_cast<double>(m);
    gt[m + n] = kernel_antiderivative(kernel_, (mm + 1.0) * h) - kernel_antiderivative(kernel_, mm * h);
  }
  grad_ = Toeplitz(std::move(gt), n, n + 1, fft);
}

Vec RieszOperator::potential(const Vec& rho) const { return pot_.apply(rho); }

Vec RieszOperator::gradient(const Vec& rho) const {
  const Index n = grid_.n;
  const double h = grid_.h();
  Vec sl(n + 1);
  for (Index j = 0; j <= n; ++j) {
    const double r = j < n ? rho[j] : 0.0;
    const double l = j > 0 ? rho[j - 1] : 0.0;
    sl[j] = (r - l) / h;
  }
  return grad_.apply(sl);
}

Vec riesz_potential(const Grid& g, const Vec& rho, const RieszConfig& cfg) {
  return RieszOperator(g, cfg).potential(rho);
}
Vec riesz_potential(const GridDensity& rho, const RieszConfig& cfg) {
  return riesz_potential(rho.grid, rho.values, cfg);
}
Vec riesz_gradient(const Grid& g, const Vec& rho, const RieszConfig& cfg) {
  return RieszOperator(g, cfg).gradient(rho);
}
Vec riesz_gradient(const GridDensity& rho, const RieszConfig& cfg) {
  return riesz_gradient(rho.grid, rho.values, cfg);
}

namespace {

// ∫ |x-y|^{2s-3}(u(x)-u(y)) dy with moment-corrected cell weights.
Vec hypersingular(const Grid& g, const Vec& u, double s, Boundary bc, int radius, bool fft) {
  const Index n = g.n;
  const double h = g.h();
  const double p = 2.0 * s - 3.0;
  const bool per = bc == Boundary::periodic;
  const Vec du = centered_first(u, h, per);
  const Vec d2u = centered_second(u, h, per);
  const double self = 2.0 * std::pow(0.5 * h, 2.0 * s) / (2.0 * s);

  // taps indexed by i-j; the cell of u_j sits at offset m = j-i
  Vec k0(2 * n - 1), k1(2 * n - 1), k2(2 * n - 1);
  k0.setZero();
  k1.setZero();
  k2.setZero();
  Index span = n - 1;
  Index images = 0;
  if (per) {
    images = 16;
    span = images * n + n / 2;
  }
  for (Index m = -span; m <= span; ++m) {
    if (m == 0) continue;
    const CellMoments cm = cell_moments(h, m, p);
    const bool corr = std::abs(m) <= radius;
    // fold offset j-i = m onto the stored index i-j
    Index t = -m;
    if (per) t = ((t % n) + n) % n;
    if (per) {
      k0[t] += cm.k0;
      if (corr) {
        k1[t] += cm.k1;
        k2[t] += cm.k2;
      }
    } else {
      k0[t + n - 1] = cm.k0;
      if (corr) {
        k1[t + n - 1] = cm.k1;
        k2[t + n - 1] = cm.k2;
      }
    }
  }

  Vec out(n);
  if (!per) {
    const Toeplitz T0(k0, n, n, fft), T1(k1, n, n, fft), T2(k2, n, n, fft);
    const Vec a = T0.apply(u), b = T1.apply(du), c = T2.apply(d2u);
    const Vec rows = T0.apply(Vec::Ones(n));
    for (Index i = 0; i < n; ++i) {
      const double xi = g.x(i);
      const double tails =
          (std::pow(g.x_max - xi, 2.0 * s - 2.0) + std::pow(xi - g.x_min, 2.0 * s - 2.0)) / (2.0 - 2.0 * s);
      out[i] = u[i] * (rows[i] + tails) - a[i] - b[i] - 0.5 * c[i] - 0.5 * d2u[i] * self;
    }
    return out;
  }

  // periodic: circulant products, far images replaced by the period mean
  const double far = (static_cast<double>(span) + 0.5) * h;
  const double tail = 2.0 * std::pow(far, 2.0 * s - 2.0) / (2.0 - 2.0 * s);
  const double mean = u.mean();
  const double k0sum = k0.sum();
  for (Index i = 0; i < n; ++i) {
    double a = 0.0, b = 0.0, c = 0.0;
    for (Index j = 0; j < n; ++j) {
      const Index t = ((i - j) % n + n) % n;
      a += k0[t] * u[j];
      b += k1[t] * du[j];
      c += k2[t] * d2u[j];
    }
    out[i] = u[i] * k0sum - a - b - 0.5 * c - 0.5 * d2u[i] * self + (u[i] - mean) * tail;
  }
  return out;
}

}  // namespace

Vec frac_laplacian(const Grid& g, const Vec& u, double s, Boundary bc) {
  const KernelCase k = riesz_constant(s);
  return k.c_plus * (2.0 - 2.0 * s) * hypersingular(g, u, s, bc, 4, true);
}

Vec riesz_second_derivative(const Grid& g, const Vec& rho, const RieszConfig& cfg) {
  const KernelCase k = riesz_constant(cfg.s);
  const bool fft = cfg.method == Method::truncated_convolution;
  return -k.c_plus * (2.0 - 2.0 * cfg.s) *
         hypersingular(g, rho, cfg.s, Boundary::zero_extension, std::max(1, cfg.singularity_radius), fft);
}
Vec riesz_second_derivative(const GridDensity& rho, const RieszConfig& cfg) {
  return riesz_second_derivative(rho.grid, rho.values, cfg);
}

double neg_sobolev_norm(const RieszOperator& op, const Vec& u) {
  const KernelCase& k = op.kernel();
  const double h = op.grid().h();
  if (k.s >= 0.5) {
    const double l1 = h * u.cwiseAbs().sum();
    if (std::abs(h * u.sum()) > 1e-8 * std::max(l1, 1e-300))
      throw Error(Errc::OutOfRange, "negative Sobolev norm at s >= 1/2 needs a zero-mass input");
  }
  const double q = op.quadratic_form(u);
  if (q >= 0.0) return std::sqrt(q);
  const double l1 = h * u.cwiseAbs().sum();
  const double scale = std::abs(op.weights().tap(0)) / h;
  if (q < -1e-8 * l1 * l1 * scale)
    throw Error(Errc::NegativeBeyondTolerance, "quadratic form is negative beyond round-off");
  return 0.0;
}

double neg_sobolev_norm(const Grid& g, const Vec& u, double s) {
  RieszConfig cfg;
  cfg.s = s;
  return neg_sobolev_norm(RieszOperator(g, cfg), u);
}

double hdot_seminorm(const Grid& g, const Vec& u, double r) {
  if (!(r > 0.0 && r < 0.5)) throw Error(Errc::OutOfRange, "Ḣ^r order must lie in (0,1/2)");
  const Index n = g.n;
  const double h = g.h();
  const double p = -1.0 - 2.0 * r;
  Vec kap(n);
  kap[0] = 0.0;
  for (Index m = 1; m < n; ++m) kap[m] = cell_moments(h, m, p).k0;
  const Vec du = centered_first(u, h, false);
  const double self = 2.0 * std::pow(0.5 * h, 2.0 - 2.0 * r) / (2.0 - 2.0 * r);
  Vec row(n);
  parallel_for(n, [&](Index i) {
    double acc = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = u[i] - u[j];
      acc += kap[std::abs(i - j)] * d * d;
    }
    const double xi = g.x(i);
    const double out = (std::pow(g.x_max - xi, -2.0 * r) + std::pow(xi - g.x_min, -2.0 * r)) / (2.0 * r);
    row[i] = acc + du[i] * du[i] * self + 2.0 * u[i] * u[i] * out;
  });
  double total = 0.0;
  for (Index i = 0; i < n; ++i) total += row[i];
  return std::sqrt(0.5 * sobolev_constant(r) * h * total);
}

}  // namespace fpme
