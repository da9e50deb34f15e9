#pragma once

#include "fpme/common.hpp"

#include <cstdint>
#include <random>
#include <string>

namespace fpme {

// Uniform cell-centered grid on [x_min, x_max].
struct Grid {
  double x_min = -1.0;
  double x_max = 1.0;
  Index n = 2;

  Grid() = default;
  Grid(double lo, double hi, Index cells);
  static Grid symmetric(double half_width, Index cells) { return Grid(-half_width, half_width, cells); }

  double h() const { return (x_max - x_min) / static_cast<double>(n); }
  double x(Index i) const { return x_min + (static_cast<double>(i) + 0.5) * h(); }
  double edge(Index k) const { return x_min + static_cast<double>(k) * h(); }
  Vec centers() const;

  bool operator==(const Grid& o) const { return x_min == o.x_min && x_max == o.x_max && n == o.n; }
};

// Midpoint-rule mass of a grid function; the summation order is fixed (left to right).
double grid_mass(const Grid& g, const Vec& v);

struct GridDensity {
  Grid grid;
  Vec values;
  double mass = 0.0;

  GridDensity() = default;
  GridDensity(const Grid& g, Vec v);

  Index size() const { return grid.n; }
  double operator[](Index i) const { return values[i]; }
};

GridDensity normalize(const GridDensity& rho);
double moment(const GridDensity& rho, int k);

// Piecewise-linear CDF through the cell edges and its lower inverse.
class QuantileFn {
 public:
  explicit QuantileFn(const GridDensity& rho);

  double cdf(double x) const;
  double quantile(double q) const;
  // CDF at a cell center.
  double cdf_center(Index i) const { return F_[i] + 0.5 * (F_[i + 1] - F_[i]); }
  const Vec& edge_cdf() const { return F_; }
  const Grid& grid() const { return grid_; }

 private:
  Grid grid_;
  Vec F_;
};

QuantileFn cdf_quantile(const GridDensity& rho);

double holder_seminorm(const Grid& g, const Vec& u, double alpha);

struct TailReport {
  double a = 0.0;
  double A = 0.0;
  bool satisfied = true;
  Index worst_cell = -1;
  double worst_ratio = 0.0;  // max rho_i / (A e^{-a|x_i|})
};

TailReport tail_check(const GridDensity& rho, double a, double A);

struct DensitySpec {
  std::uint64_t seed = 1;
  int n_bumps = 3;
  double alpha = 0.8;
  double support_scale = 1.5;
  bool centered = false;  // all bumps at the origin: an even density
};

// Sum of amp*(1-((x-c)/w)^2)_+^alpha bumps times e^{-|x|}, normalized.
GridDensity random_density(const DensitySpec& spec, const Grid& grid);
// Same, plus the tail bound the construction guarantees (a = 1).
GridDensity random_density(const DensitySpec& spec, const Grid& grid, TailReport* tail);

// Spec drawn from a corpus seed: bump count, Hölder exponent in [0.6, 1], scale 1.5.
DensitySpec corpus_spec(std::uint64_t seed);

// Deterministic uniform draws in [0,1) from a 64-bit Mersenne twister.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 eng_;
};

void write_density_csv(const std::string& path, const GridDensity& rho);
GridDensity read_density_csv(const std::string& path);

}  // namespace fpme
