#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>

namespace fpme {

using Vec = Eigen::VectorXd;
using Index = Eigen::Index;

enum class Errc {
  ZeroMass,
  NotNormalized,
  OutOfRange,
  NonPositive,
  OutsideSupport,
  Inconsistent,
  EmptySupport,
  NegativeBeyondTolerance,
  NegativeRemainder,
  DegenerateDenominator,
  ParameterOrder,
  EpsilonOutOfRange,
  CflViolation,
  PositivityLoss,
  EnergyIncrease,
  InsufficientSamples,
  NonpositiveQuantity,
  NotConverged,
  Io,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// Worker count for row-parallel loops. Every parallel loop writes one
// output slot per row, so results never depend on this setting.
void set_num_threads(unsigned n);
unsigned num_threads();

void parallel_for(Index n, const std::function<void(Index)>& body);

}  // namespace fpme
