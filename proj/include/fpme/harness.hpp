#pragma once

#include "fpme/evolve.hpp"
#include "fpme/grid.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fpme {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInvariant = 3;
inline constexpr int kSchemaVersion = 1;

const char* tool_version();

// Ends in a nonzero exit: 2 for configuration problems, 3 for failed invariants.
class CommandFailure : public std::runtime_error {
 public:
  CommandFailure(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

struct SimulateOptions {
  double s = 0.25;
  std::optional<double> lambda;  // unset: 1/(3-2s)
  double eps = 0.0;
  Index grid_n = 1024;
  double xmax = 4.0;
  std::string dt = "cfl:0.5";
  double t_end = 5.0;
  std::string init = "barenblatt-shift:0.5";
  int snapshot_every = 50;
  bool snapshots = true;
  std::string out_dir = "run";
};

struct VerifyOptions {
  std::vector<std::string> suites{"hwi", "lsi", "talagrand", "lemmaE"};
  int samples = 200;
  std::uint64_t seed = 42;
  double s = 0.25;
  double lambda = 0.4;
  double eps = 0.0;
  Index grid_n = 1024;
  double xmax = 4.0;
  bool per_sample = true;
};

struct ConvergenceOptions {
  double s = 0.25;
  int levels = 5;
  Index base_n = 256;
};

struct ConvergenceRow {
  double h = 0.0, err_Linf = 0.0, err_L2 = 0.0, order = 0.0;
};

struct SteadyOptions {
  double s = 0.25;
  std::optional<double> lambda;
  std::optional<double> mass;
  std::optional<double> radius;
  double x0 = 0.0;
  Index grid_n = 1024;
  double xmax = 4.0;
  std::string out_dir = "steady";
};

struct DecayFitOptions {
  std::string traj;
  std::string quantity = "E";
  double t0 = 0.5, t1 = 1e300;
  std::optional<double> e_inf;
  std::optional<double> bound_rate;
  std::optional<double> prefactor;
  std::optional<double> s, lambda;
  double tol = 0.05;
};

// Initial data by name: barenblatt, barenblatt-shift:<x0>, rho_inf, or a CSV path.
GridDensity make_initial(const std::string& spec, const Grid& g, double s, double lambda);

nlohmann::json run_simulate(const SimulateOptions& o);
nlohmann::json run_verify(const VerifyOptions& o);
std::vector<ConvergenceRow> run_riesz_convergence(const ConvergenceOptions& o);
nlohmann::json run_steady(const SteadyOptions& o);
nlohmann::json run_decay_fit(const DecayFitOptions& o);

void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows);
void write_json(const std::string& path, const nlohmann::json& j);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fpme
