#include "fpme/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace fpme {

Grid::Grid(double lo, double hi, Index cells) : x_min(lo), x_max(hi), n(cells) {
  if (!(hi > lo)) throw Error(Errc::OutOfRange, "grid needs x_max > x_min");
  if (cells < 2) throw Error(Errc::OutOfRange, "grid needs at least 2 cells");
}

Vec Grid::centers() const {
  Vec x(n);
  for (Index i = 0; i < n; ++i) x[i] = this->x(i);
  return x;
}

double grid_mass(const Grid& g, const Vec& v) {
  // Neumaier compensated sum, left to right
  double s = 0.0, c = 0.0;
  for (Index i = 0; i < v.size(); ++i) {
    const double t = s + v[i];
    c += std::abs(s) >= std::abs(v[i]) ? (s - t) + v[i] : (v[i] - t) + s;
    s = t;
  }
  return std::fma(g.h(), s, g.h() * c);
}

GridDensity::GridDensity(const Grid& g, Vec v) : grid(g), values(std::move(v)) {
  if (values.size() != grid.n) throw Error(Errc::OutOfRange, "density size does not match grid");
  for (Index i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0)) throw Error(Errc::OutOfRange, "density must be nonnegative");
  }
  mass = grid_mass(grid, values);
}

GridDensity normalize(const GridDensity& rho) {
  if (rho.mass == 1.0) return rho;
  if (!(rho.mass > 0.0)) throw Error(Errc::ZeroMass, "cannot normalize a zero density");
  GridDensity out = rho;
  out.values /= rho.mass;
  out.mass = grid_mass(out.grid, out.values);
  // Rounding can leave the sum an ulp or two off 1; nudge the largest cell.
  Index k;
  out.values.maxCoeff(&k);
  for (int it = 0; it < 32 && out.mass != 1.0; ++it) {
    const double d = (1.0 - out.mass) / out.grid.h();
    double v = out.values[k] + d;
    if (v == out.values[k]) v = std::nextafter(v, d > 0.0 ? 2.0 * v : 0.0);
    out.values[k] = v;
    out.mass = grid_mass(out.grid, out.values);
  }
  return out;
}

double moment(const GridDensity& rho, int k) {
  if (k < 0 || k > 2) throw Error(Errc::OutOfRange, "moment order must be 0, 1 or 2");
  if (k == 0) return rho.mass;
  const double h = rho.grid.h();
  double s = 0.0;
  for (Index i = 0; i < rho.size(); ++i) {
    const double x = rho.grid.x(i);
    s += (k == 1 ? x : x * x) * rho.values[i];
  }
  return h * s;
}

QuantileFn::QuantileFn(const GridDensity& rho) : grid_(rho.grid), F_(rho.grid.n + 1) {
  if (std::abs(rho.mass - 1.0) > 1e-10) throw Error(Errc::NotNormalized, "quantiles need unit mass");
  const double h = grid_.h();
  F_[0] = 0.0;
  double acc = 0.0;
  for (Index i = 0; i < grid_.n; ++i) {
    acc += rho.values[i];
    F_[i + 1] = h * acc;
  }
  F_[grid_.n] = 1.0;
  for (Index i = grid_.n; i > 0; --i) F_[i - 1] = std::min(F_[i - 1], F_[i]);
}

double QuantileFn::cdf(double x) const {
  if (x <= grid_.x_min) return 0.0;
  if (x >= grid_.x_max) return 1.0;
  const double u = (x - grid_.x_min) / grid_.h();
  Index k = std::min<Index>(static_cast<Index>(u), grid_.n - 1);
  const double t = u - static_cast<double>(k);
  return F_[k] + t * (F_[k + 1] - F_[k]);
}

double QuantileFn::quantile(double q) const {
  if (q <= 0.0) {
    // left end of the support
    Index k = 0;
    while (k < grid_.n && F_[k + 1] <= 0.0) ++k;
    return grid_.edge(k);
  }
  if (q >= 1.0) q = 1.0;
  const double* b = F_.data();
  const Index k = std::lower_bound(b, b + F_.size(), q) - b;  // first edge with F >= q
  if (k == 0) return grid_.x_min;
  const double dF = F_[k] - F_[k - 1];
  const double t = dF > 0.0 ? (q - F_[k - 1]) / dF : 1.0;
  return grid_.edge(k - 1) + t * grid_.h();
}

QuantileFn cdf_quantile(const GridDensity& rho) { return QuantileFn(rho); }

double holder_seminorm(const Grid& g, const Vec& u, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(Errc::OutOfRange, "Hölder exponent must lie in (0,1]");
  const Index n = u.size();
  const Index stride = n <= 4096 ? 1 : (n + 4095) / 4096;
  const Index m = (n + stride - 1) / stride;
  const double h = g.h();
  std::vector<double> row(m, 0.0);
  parallel_for(m, [&](Index a) {
    const Index i = a * stride;
    double best = 0.0;
    for (Index b = a + 1; b < m; ++b) {
      const Index j = b * stride;
      const double d = std::abs(u[i] - u[j]) / std::pow(h * static_cast<double>(j - i), alpha);
      best = std::max(best, d);
    }
    row[a] = best;
  });
  return *std::max_element(row.begin(), row.end());
}

TailReport tail_check(const GridDensity& rho, double a, double A) {
  if (!(a > 0.0 && A > 0.0)) throw Error(Errc::OutOfRange, "tail rate and amplitude must be positive");
  TailReport r;
  r.a = a;
  r.A = A;
  for (Index i = 0; i < rho.size(); ++i) {
    const double ratio = rho.values[i] / (A * std::exp(-a * std::abs(rho.grid.x(i))));
    if (ratio > r.worst_ratio) {
      r.worst_ratio = ratio;
      r.worst_cell = i;
    }
  }
  r.satisfied = r.worst_ratio <= 1.0;
  return r;
}

Rng::Rng(std::uint64_t seed) : eng_(seed) {}

double Rng::uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

DensitySpec corpus_spec(std::uint64_t seed) {
  Rng r(seed ^ 0x9e3779b97f4a7c15ULL);
  DensitySpec d;
  d.seed = seed;
  d.n_bumps = 1 + static_cast<int>(r.uniform() * 4.0);
  d.alpha = r.uniform(0.6, 1.0);
  d.support_scale = 1.5;
  return d;
}

GridDensity random_density(const DensitySpec& spec, const Grid& grid) { return random_density(spec, grid, nullptr); }

GridDensity random_density(const DensitySpec& spec, const Grid& grid, TailReport* tail) {
  if (spec.n_bumps < 1 || spec.n_bumps > 8) throw Error(Errc::OutOfRange, "n_bumps must be in [1,8]");
  if (!(spec.alpha > 0.0 && spec.alpha <= 1.0)) throw Error(Errc::OutOfRange, "alpha must be in (0,1]");
  if (!(spec.support_scale > 0.0)) throw Error(Errc::OutOfRange, "support_scale must be positive");
  Rng r(spec.seed);
  struct Bump { double c, w, amp; };
  std::vector<Bump> bumps;
  double amp_sum = 0.0;
  for (int k = 0; k < spec.n_bumps; ++k) {
    Bump b;
    b.c = r.uniform(-spec.support_scale, spec.support_scale);
    b.w = r.uniform(0.3, 1.0) * spec.support_scale;
    b.amp = r.uniform(0.5, 1.5);
    if (spec.centered) b.c = 0.0;
    bumps.push_back(b);
    amp_sum += b.amp;
  }
  Vec v(grid.n);
  for (Index i = 0; i < grid.n; ++i) {
    const double x = grid.x(i);
    double s = 0.0;
    for (const auto& b : bumps) {
      const double z = (x - b.c) / b.w;
      if (std::abs(z) < 1.0) s += b.amp * std::pow(1.0 - z * z, spec.alpha);
    }
    v[i] = s * std::exp(-std::abs(x));
  }
  GridDensity raw(grid, v);
  if (!(raw.mass > 0.0)) throw Error(Errc::ZeroMass, "random density has no cell inside a bump");
  const double Z = raw.mass;
  GridDensity out = normalize(raw);
  if (tail) *tail = tail_check(out, 1.0, amp_sum / Z * (1.0 + 1e-12));
  return out;
}

void write_density_csv(const std::string& path, const GridDensity& rho) {
  std::ofstream f(path);
  if (!f) throw Error(Errc::Io, "cannot write " + path);
  f << "x,rho\n" << std::setprecision(17);
  for (Index i = 0; i < rho.size(); ++i) f << rho.grid.x(i) << ',' << rho.values[i] << '\n';
}

GridDensity read_density_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::Io, "cannot read " + path);
  std::string line;
  std::getline(f, line);
  if (line.rfind("x,rho", 0) != 0) throw Error(Errc::Io, path + ": expected header x,rho");
  std::vector<double> xs, vs;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string a, b;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b)) throw Error(Errc::Io, path + ": malformed row");
    xs.push_back(std::stod(a));
    vs.push_back(std::stod(b));
  }
  if (xs.size() < 2) throw Error(Errc::Io, path + ": need at least two rows");
  const Index n = static_cast<Index>(xs.size());
  const double h = (xs.back() - xs.front()) / static_cast<double>(n - 1);
  for (Index i = 1; i < n; ++i) {
    if (std::abs(xs[i] - xs[i - 1] - h) > 1e-9 * std::max(1.0, std::abs(h)))
      throw Error(Errc::Io, path + ": cell centers are not uniform");
  }
  Grid g(xs.front() - 0.5 * h, xs.back() + 0.5 * h, n);
  Vec v = Eigen::Map<Vec>(vs.data(), n);
  return GridDensity(g, v);
}

}  // namespace fpme
