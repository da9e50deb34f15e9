#include "fpme/common.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace fpme {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::ZeroMass: return "ZeroMass";
    case Errc::NotNormalized: return "NotNormalized";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::NonPositive: return "NonPositive";
    case Errc::OutsideSupport: return "OutsideSupport";
    case Errc::Inconsistent: return "Inconsistent";
    case Errc::EmptySupport: return "EmptySupport";
    case Errc::NegativeBeyondTolerance: return "NegativeBeyondTolerance";
    case Errc::NegativeRemainder: return "NegativeRemainder";
    case Errc::DegenerateDenominator: return "DegenerateDenominator";
    case Errc::ParameterOrder: return "ParameterOrder";
    case Errc::EpsilonOutOfRange: return "EpsilonOutOfRange";
    case Errc::CflViolation: return "CflViolation";
    case Errc::PositivityLoss: return "PositivityLoss";
    case Errc::EnergyIncrease: return "EnergyIncrease";
    case Errc::InsufficientSamples: return "InsufficientSamples";
    case Errc::NonpositiveQuantity: return "NonpositiveQuantity";
    case Errc::NotConverged: return "NotConverged";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

namespace {
std::atomic<unsigned> g_threads{1};
}

void set_num_threads(unsigned n) { g_threads = std::max(1u, n); }
unsigned num_threads() { return g_threads; }

void parallel_for(Index n, const std::function<void(Index)>& body) {
  const unsigned t = std::min<Index>(g_threads.load(), std::max<Index>(n, 1));
  if (t <= 1 || n < 64) {
    for (Index i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(t);
  const Index chunk = (n + t - 1) / t;
  for (unsigned k = 0; k < t; ++k) {
    const Index lo = k * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] {
      for (Index i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace fpme
