#pragma once

#include "fpme/common.hpp"
#include "fpme/grid.hpp"

#include <unsupported/Eigen/FFT>

#include <complex>
#include <memory>
#include <vector>

namespace fpme {

enum class Regime { power_positive, logarithmic, power_negative };

// Kernel of (-Δ)^{-s} on the line: c|y|^{2s-1}, or -(1/π)log|y| at s = 1/2.
struct KernelCase {
  Regime regime = Regime::power_positive;
  double s = 0.25;
  double c = 0.0;       // 1/π in the logarithmic regime
  double c_plus = 0.0;  // (1-2s)c, continued through s = 1/2
};

KernelCase riesz_constant(double s);

// Normalization of the Ḣ^r seminorm as a double integral of squared differences.
double sobolev_constant(double r);

enum class Method { direct_quadrature, truncated_convolution };

struct RieszConfig {
  double s = 0.25;
  Method method = Method::truncated_convolution;
  int singularity_radius = 1;
};

// y_i = Σ_j t_{i-j} x_j for i < n_out, j < n_in.
class Toeplitz {
 public:
  Toeplitz() = default;
  // taps[k] holds offset k - (n_in - 1)
  Toeplitz(Vec taps, Index n_out, Index n_in, bool use_fft);

  Vec apply(const Vec& x) const;
  double tap(Index offset) const { return taps_[offset + n_in_ - 1]; }
  Index n_out() const { return n_out_; }
  Index n_in() const { return n_in_; }

 private:
  Vec taps_;
  Index n_out_ = 0, n_in_ = 0;
  bool fft_ = false;
  Index N_ = 0;
  std::vector<std::complex<double>> spec_;
  mutable std::shared_ptr<Eigen::FFT<double>> plan_;
};

// Antiderivative of the potential kernel, odd in z.
double kernel_antiderivative(const KernelCase& k, double z);
// Cell integral ∫ of the potential kernel over [(m-1/2)h, (m+1/2)h].
double potential_weight(const KernelCase& k, double h, Index m);

// Precomputed exact cell weights on one grid.
class RieszOperator {
 public:
  RieszOperator(const Grid& g, const RieszConfig& cfg);

  Vec potential(const Vec& rho) const;
  // Derivative of the potential of the piecewise-linear interpolant through
  // the cell values (zero one cell beyond each end).
  Vec gradient(const Vec& rho) const;
  double quadratic_form(const Vec& u) const { return grid_.h() * u.dot(potential(u)); }

  const Grid& grid() const { return grid_; }
  const KernelCase& kernel() const { return kernel_; }
  const Toeplitz& weights() const { return pot_; }
  // |Σ_m (-1)^m w_m|: largest eigenvalue of the weight matrix.
  double symbol_at_nyquist() const { return nyquist_; }

 private:
  Grid grid_;
  RieszConfig cfg_;
  KernelCase kernel_;
  Toeplitz pot_;
  Toeplitz grad_;
  double nyquist_ = 0.0;
};

Vec riesz_potential(const GridDensity& rho, const RieszConfig& cfg);
Vec riesz_potential(const Grid& g, const Vec& rho, const RieszConfig& cfg);
Vec riesz_gradient(const GridDensity& rho, const RieszConfig& cfg);
Vec riesz_gradient(const Grid& g, const Vec& rho, const RieszConfig& cfg);
Vec riesz_second_derivative(const GridDensity& rho, const RieszConfig& cfg);
Vec riesz_second_derivative(const Grid& g, const Vec& rho, const RieszConfig& cfg);

enum class Boundary { zero_extension, periodic };

Vec frac_laplacian(const Grid& g, const Vec& u, double s, Boundary bc = Boundary::zero_extension);

double neg_sobolev_norm(const Grid& g, const Vec& u, double s);
double neg_sobolev_norm(const RieszOperator& op, const Vec& u);
double hdot_seminorm(const Grid& g, const Vec& u, double r);

}  // namespace fpme
