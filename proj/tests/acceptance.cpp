// Acceptance checks, one PASS/FAIL line per criterion.
#include "fpme/energy.hpp"
#include "fpme/evolve.hpp"
#include "fpme/grid.hpp"
#include "fpme/harness.hpp"
#include "fpme/riesz.hpp"
#include "fpme/steady.hpp"
#include "fpme/transport.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace fpme;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [fail: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const std::vector<double> kOrders{0.1, 0.25, 0.4};
constexpr double kLambda = 0.4;

// ---------------------------------------------------------------- C1
void c1(Outcome& o) {
  for (double s : kOrders) {
    const auto t0 = std::chrono::steady_clock::now();
    ConvergenceOptions co;
    co.s = s;
    co.levels = 5;
    co.base_n = 256;
    const auto rows = run_riesz_convergence(co);
    const double dt = seconds_since(t0);
    double min_order = 1e300;
    for (std::size_t k = 1; k < rows.size(); ++k) min_order = std::min(min_order, rows[k].order);
    const double fine = rows.back().err_Linf;
    o.detail << " s=" << s << ": err(4096)=" << fine << " min_order=" << min_order << " " << dt << "s;";
    o.check(fine <= 1e-3, "relative Linf error at n=4096");
    o.check(min_order >= 1.0, "convergence order");
    o.check(dt <= 60.0, "runtime");
  }
}

// ---------------------------------------------------------------- C2
void c2(Outcome& o) {
  for (double s : kOrders) {
    const BarenblattProfile p = barenblatt(s, kLambda, SupportSize::with_mass(1.0));
    const Grid g = Grid::symmetric(1.5 * p.R, 4096);
    const GridDensity rho = normalize(sample(p, g));
    const double I = dissipation(rho, s, kLambda, 0.0);
    const double m2 = moment(rho, 2);
    const EulerLagrangeReport el = euler_lagrange_check(rho, s, kLambda);
    const double cs = kLambda * p.R * p.R / (2.0 * (1.0 - 2.0 * s));
    const double crel = std::abs(el.C_star - cs) / cs;
    o.detail << " s=" << s << ": I/(lam^2 m2)=" << I / (kLambda * kLambda * m2)
             << " EL dev/C*=" << el.max_dev_on_support / cs << " C* rel=" << crel << ";";
    o.check(I <= 1e-6 * kLambda * kLambda * m2, "dissipation at the steady state");
    o.check(el.max_dev_on_support <= 1e-3 * cs, "Euler-Lagrange deviation");
    o.check(crel <= 1e-3, "C* closed form");
  }
}

// ---------------------------------------------------------------- C3, C4, C8 runs

struct DecayRun {
  double s = 0.0, dt = 0.0, seconds = 0.0;
  Trajectory traj;
};

SolverConfig decay_config(double s) {
  SolverConfig c;
  c.s = s;
  c.lambda = kLambda;
  c.grid = Grid::symmetric(3.0, 1024);
  c.t_end = 5.0;
  return c;
}

double base_dt(const SolverConfig& c, const GridDensity& init) {
  double dt = 1e-3;
  const double stable = FvSolver(c).stable_dt(init.values);
  while (dt > 0.5 * stable) dt /= 2;
  return dt;
}

DecayRun decay_run(double s, int halvings) {
  SolverConfig c = decay_config(s);
  const GridDensity init = make_initial("barenblatt-shift:0.5", c.grid, s, kLambda);
  const GridDensity target = discrete_minimizer(c.grid, s, kLambda, 1.0).rho;
  DecayRun r;
  r.s = s;
  r.dt = std::ldexp(base_dt(c, init), -halvings);
  c.dt = r.dt;
  c.snapshot_every = std::max(1, static_cast<int>(std::lround(0.05 / r.dt)));
  const auto t0 = std::chrono::steady_clock::now();
  r.traj = integrate(c, init, target);
  r.seconds = seconds_since(t0);
  return r;
}

std::map<std::pair<double, int>, DecayRun> g_runs;

const DecayRun& cached_run(double s, int halvings) {
  const auto key = std::make_pair(s, halvings);
  auto it = g_runs.find(key);
  if (it == g_runs.end()) it = g_runs.emplace(key, decay_run(s, halvings)).first;
  return it->second;
}

void c3(Outcome& o) {
  for (double s : kOrders) {
    const DecayRun& r = cached_run(s, 0);
    const auto& d = r.traj.diag;
    const double g0 = d.front().E - r.traj.E_inf;
    double worstE = 0.0, worstW = 0.0;
    for (const auto& q : d) {
      if (q.t < 0.5) continue;
      worstE = std::max(worstE, (q.E - r.traj.E_inf) / (g0 * std::exp(-2.0 * kLambda * q.t)));
      worstW = std::max(worstW, q.W2 / (std::sqrt(2.0 / kLambda * g0) * std::exp(-kLambda * q.t)));
    }
    o.detail << " s=" << s << ": dt=" << r.dt << " E ratio=" << worstE << " W2 ratio=" << worstW << " "
             << r.seconds << "s;";
    o.check(worstE <= 1.05, "energy envelope");
    o.check(worstW <= 1.05, "W2 envelope");
    o.check(r.seconds <= 300.0, "runtime");
  }
}

double worst_residual(const Trajectory& tr) {
  double m = 0.0;
  for (std::size_t k = 0; k < tr.step_t.size(); ++k)
    if (tr.step_t[k] >= 0.5) m = std::max(m, tr.step_residual[k]);
  return m;
}

void c4(Outcome& o) {
  for (double s : kOrders) {
    const DecayRun& a = cached_run(s, 0);
    const DecayRun& b = cached_run(s, 1);
    const double ra = worst_residual(a.traj), rb = worst_residual(b.traj);
    const double f = ra / rb;
    o.detail << " s=" << s << ": C(dt)=" << ra / a.dt << " C(dt/2)=" << rb / b.dt << " factor=" << f << ";";
    o.check(f >= 1.7 && f <= 2.3, "Richardson factor");
  }
}

// ---------------------------------------------------------------- C5
void c5(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  VerifyOptions v;
  v.suites = {"hwi", "lsi", "talagrand", "lemmaE", "remainder", "virial"};
  v.samples = 200;
  v.seed = 1;
  v.s = 0.25;
  v.lambda = kLambda;
  v.grid_n = 1024;
  v.xmax = 4.0;
  v.per_sample = false;
  const auto rep = run_verify(v);
  const double dt = seconds_since(t0);
  for (auto& [name, j] : rep["suites"].items()) {
    o.detail << " " << name << "=" << j["worst_margin"].get<double>();
    o.check(j["pass"].get<bool>(), name);
  }
  o.detail << " (" << dt << "s)";
  o.check(dt <= 600.0, "runtime");
}

// ---------------------------------------------------------------- C6
void c6(Outcome& o) {
  const double s = 0.25;
  const Grid g = Grid::symmetric(4.0, 1024);
  const GridDensity r0 = discrete_minimizer(g, s, kLambda, 1.0).rho;
  const double E0 = EnergyModel(g, s, kLambda).energy(r0.values).total;
  const double ent0 = boltzmann(r0);
  for (double eps : {1e-2, 1e-3}) {
    o.check(eps < kLambda / (2.0 * std::numbers::pi), "eps below lambda/(2 pi)");
    VerifyOptions v;
    v.suites = {"hwi", "lsi", "talagrand"};
    v.samples = 200;
    v.seed = 1;
    v.s = s;
    v.lambda = kLambda;
    v.eps = eps;
    v.grid_n = g.n;
    v.xmax = 4.0;
    v.per_sample = false;
    const auto rep = run_verify(v);
    o.detail << " eps=" << eps << ":";
    for (const char* name : {"hwi", "lsi", "talagrand"}) {
      o.detail << " " << name << "=" << rep["suites"][name]["worst_margin"].get<double>();
      o.check(rep["suites"][name]["pass"].get<bool>(), std::string(name) + " eps");
    }
    SolverConfig c;
    c.s = s;
    c.lambda = kLambda;
    c.eps = eps;
    c.grid = g;
    const EpsSteadyState st = steady_state_eps(c, r0);
    const double Ee = EnergyModel(g, s, kLambda, eps).energy(st.rho.values).total;
    const double lo = Ee + eps * std::numbers::pi * moment(st.rho, 2) - E0;
    const double hi = E0 + eps * ent0 - Ee;
    o.detail << " sandwich margins " << lo << ", " << hi << ";";
    o.check(lo >= 0.0, "lower sandwich");
    o.check(hi >= 0.0, "upper sandwich");
  }
}

// ---------------------------------------------------------------- C7
void c7(Outcome& o) {
  VerifyOptions v;
  v.suites = {"gns"};
  v.samples = 200;
  v.seed = 1;
  v.s = 0.25;
  v.lambda = kLambda;
  v.per_sample = false;
  const auto rep = run_verify(v);
  const auto& j = rep["suites"]["gns"];
  double lo = 1e300, hi = -1e300;
  for (const auto& m : j["family"]) {
    lo = std::min(lo, m["ratio"].get<double>());
    hi = std::max(hi, m["ratio"].get<double>());
  }
  const double spread = (hi - lo) / lo;
  o.detail << " family size " << j["family"].size() << ", spread " << spread << ", corpus worst margin "
           << j["worst_margin"].get<double>();
  o.check(spread <= 0.005, "family spread");
  o.check(j["pass"].get<bool>(), "corpus ratio");
}

// ---------------------------------------------------------------- C8
double interp_constant(Index n) {
  VerifyOptions v;
  v.suites = {"interp"};
  v.samples = 200;
  v.seed = 1;
  v.s = 0.25;
  v.lambda = kLambda;
  v.grid_n = n;
  v.per_sample = false;
  return run_verify(v)["suites"]["interp"]["empirical_constant"].get<double>();
}

void c8(Outcome& o) {
  const double alpha = 0.5, r = 0.2;
  double worst_sum = 0.0;
  for (double s : kOrders)
    for (double a : {0.25, 0.5, 1.0 - s})
      for (double rr : {0.1 * a, 0.3 * a, 0.45 * a}) {
        const auto sg = interp_exponents(s, a, rr);
        worst_sum = std::max(worst_sum, std::abs(sg[0] + sg[1] + sg[2] - 1.0));
      }
  o.detail << " |sum sigma - 1|=" << worst_sum << ";";
  o.check(worst_sum <= 2.0 * std::numeric_limits<double>::epsilon(), "exponent sum");

  const double s = 0.25;
  const Grid g = Grid::symmetric(8.0, 4096);
  const GridDensity rinf = discrete_minimizer(g, s, kLambda, 1.0).rho;
  double amp = 0.0, dil = 0.0;
  for (std::uint64_t sd = 1; sd <= 5; ++sd) {
    const GridDensity rho = random_density(corpus_spec(sd), g);
    const Vec u = rho.values - rinf.values;
    const double q = interp_inequality(g, u, s, alpha, r).ratio();
    amp = std::max(amp, std::abs(interp_inequality(g, 3.0 * u, s, alpha, r).ratio() / q - 1.0));
    const QuantileFn F = cdf_quantile(rho), G = cdf_quantile(rinf);
    for (double L : {0.5, 2.0}) {
      Vec ul(g.n);
      for (Index i = 0; i < g.n; ++i) {
        const double a = g.edge(i) / L, b = g.edge(i + 1) / L;
        ul[i] = (F.cdf(b) - F.cdf(a) - G.cdf(b) + G.cdf(a)) / (b - a);
      }
      const InterpResult base = interp_inequality(g, u, s, alpha, r);
      const InterpResult d = interp_inequality(g, ul, s, alpha, r);
      dil = std::max({dil, std::abs(d.lhs / base.lhs / std::sqrt(L) - 1.0),
                      std::abs(d.rhs_unnormalized / base.rhs_unnormalized / std::sqrt(L) - 1.0),
                      std::abs(d.ratio() / base.ratio() - 1.0)});
    }
  }
  o.detail << " amplitude dev=" << amp << " dilation dev=" << dil << ";";
  o.check(amp <= 1e-10, "amplitude invariance");
  o.check(dil <= 0.01, "dilation covariance");

  const double c1024 = interp_constant(1024), c2048 = interp_constant(2048);
  o.detail << " C(1024)=" << c1024 << " C(2048)=" << c2048 << ";";
  o.check(std::abs(c2048 / c1024 - 1.0) <= 0.1, "empirical constant under refinement");

  for (double so : kOrders) {
    const DecayRun& run = cached_run(so, 0);
    const auto& d = run.traj.diag;
    for (DecayQuantity q : {DecayQuantity::l2, DecayQuantity::l1}) {
      const double q0 = q == DecayQuantity::l2 ? d.front().L2 : d.front().L1;
      const DecayFit f = fit_decay(d, run.traj.E_inf, q, FitWindow{}, default_bound_rate(q, so, kLambda), q0, 0.05);
      o.detail << " s=" << so << " " << quantity_name(q) << " ratio=" << f.worst_ratio;
      o.check(f.bound_satisfied, std::string(quantity_name(q)) + " envelope");
    }
    o.detail << ";";
  }
}

// ---------------------------------------------------------------- C9
GridDensity shifted(const GridDensity& r, Index k) {
  Vec v = Vec::Zero(r.size());
  for (Index i = 0; i < r.size(); ++i)
    if (i + k >= 0 && i + k < r.size()) v[i + k] = r.values[i];
  return GridDensity(r.grid, v);
}

void c9(Outcome& o) {
  const Grid g = Grid::symmetric(6.0, 2048);
  double trans = 0.0, self = 0.0;
  for (std::uint64_t sd = 1; sd <= 50; ++sd) {
    const GridDensity r = random_density(corpus_spec(sd), g);
    self = std::max(self, w2(r, r));
    for (Index k : {-50, 7, 123}) trans = std::max(trans, std::abs(w2(r, shifted(r, k)) - std::abs(k * g.h())));
  }
  const Grid g2 = Grid::symmetric(4.0, 1024);
  double tri = -1e300;
  for (std::uint64_t k = 0; k < 50; ++k) {
    const GridDensity a = random_density(corpus_spec(3 * k + 1), g2);
    const GridDensity b = random_density(corpus_spec(3 * k + 2), g2);
    const GridDensity c = random_density(corpus_spec(3 * k + 3), g2);
    tri = std::max(tri, w2(a, c) - w2(a, b) - w2(b, c));
  }
  o.detail << " translation dev=" << trans << " self=" << self << " triangle excess/h=" << tri / g2.h();
  o.check(trans <= 1e-10, "translation");
  o.check(self == 0.0, "self distance");
  o.check(tri <= g2.h(), "triangle inequality");
}

// ---------------------------------------------------------------- C10
std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int sh(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  return rc;
}

void c10(Outcome& o, const std::string& cli) {
  if (cli.empty()) {
    o.check(false, "--cli not given");
    return;
  }
  const fs::path root = fs::absolute("acceptance_determinism");
  fs::remove_all(root);
  const std::vector<std::string> cmds{
      "riesz-convergence --s 0.25 --levels 5 --base-n 256 --out {D}/conv.csv",
      "steady --s 0.25 --lambda 0.4 --mass 1 --grid-n 4096 --xmax 2 --out-dir {D}/steady",
      "simulate --s 0.25 --lambda 0.4 --grid-n 1024 --xmax 3 --t-end 1 --snapshot-every 100 --out-dir {D}/sim",
      "decay-fit --traj {D}/sim/trajectory.csv --quantity E --window 0.5:inf > {D}/fit.json",
      "verify --suite hwi,lsi,talagrand,lemmaE,remainder,virial --samples 40 --seed 1 --out {D}/verify.json",
      "verify --suite gns,interp --samples 40 --seed 1 --out {D}/verify_gns.json",
      "verify --suite hwi,lsi,talagrand --eps 0.01 --samples 20 --seed 1 --out {D}/verify_eps.json",
  };
  for (const char* th : {"1", "4"}) {
    const fs::path d = root / ("threads" + std::string(th));
    fs::create_directories(d);
    for (std::string c : cmds) {
      for (std::size_t p; (p = c.find("{D}")) != std::string::npos;) c.replace(p, 3, d.string());
      if (c.find('>') == std::string::npos) c += " > /dev/null";
      const int rc = sh("\"" + cli + "\" --threads " + th + " " + c);
      o.check(rc == 0, "command failed: " + c);
    }
  }
  std::set<fs::path> files;
  for (const char* th : {"1", "4"}) {
    const fs::path d = root / ("threads" + std::string(th));
    for (const auto& e : fs::recursive_directory_iterator(d)) {
      if (!e.is_regular_file()) continue;
      const std::string name = e.path().filename().string();
      if (name.find("manifest") != std::string::npos) continue;
      const auto ext = e.path().extension();
      if (ext != ".csv" && ext != ".json") continue;
      files.insert(fs::relative(e.path(), d));
    }
  }
  int same = 0;
  for (const auto& f : files) {
    const fs::path a = root / "threads1" / f, b = root / "threads4" / f;
    if (!fs::exists(a) || !fs::exists(b)) {
      o.check(false, "missing " + f.string());
      continue;
    }
    if (slurp(a) == slurp(b))
      ++same;
    else
      o.check(false, "differs: " + f.string());
  }
  o.detail << " " << same << "/" << files.size() << " CSV/JSON files identical across --threads 1 and 4";
  o.check(files.size() > 5, "too few outputs compared");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> only;
  std::string cli;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  app.add_option("--only", only, "criterion numbers (default: all)")->delimiter(',');
  app.add_option("--cli", cli, "path to the fpme executable");
  app.add_option("--threads", threads, "worker threads");
  CLI11_PARSE(app, argc, argv);
  set_num_threads(threads);
  if (only.empty())
    for (int k = 1; k <= 10; ++k) only.push_back(k);

  bool all = true;
  for (int k : only) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      switch (k) {
        case 1: c1(o); break;
        case 2: c2(o); break;
        case 3: c3(o); break;
        case 4: c4(o); break;
        case 5: c5(o); break;
        case 6: c6(o); break;
        case 7: c7(o); break;
        case 8: c8(o); break;
        case 9: c9(o); break;
        case 10: c10(o, cli); break;
        default: o.check(false, "no such criterion");
      }
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    std::cout << "C" << k << (o.pass ? " PASS:" : " FAIL:") << o.detail.str() << " (" << seconds_since(t0)
              << "s)" << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
