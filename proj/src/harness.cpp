#include "fpme/harness.hpp"

#include "fpme/energy.hpp"
#include "fpme/riesz.hpp"
#include "fpme/steady.hpp"
#include "fpme/transport.hpp"

#include <CLI11.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#ifndef FPME_VERSION
#define FPME_VERSION "0.0.0"
#endif

namespace fpme {

namespace fs = std::filesystem;
using nlohmann::json;

const char* tool_version() { return FPME_VERSION; }

void write_json(const std::string& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw Error(Errc::Io, "cannot write " + path);
  f << j.dump(2) << '\n';
}

namespace {

[[noreturn]] void config_error(const std::string& m) { throw CommandFailure(kExitConfig, m); }

void check_s(double s) {
  if (!(s > 0.0 && s < 1.0)) config_error("--s must lie in (0,1), got " + std::to_string(s));
}

json num(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

GridDensity make_initial(const std::string& spec, const Grid& g, double s, double lambda) {
  if (spec == "barenblatt") return normalize(sample(barenblatt(s, lambda, SupportSize::with_mass(1.0)), g));
  const std::string shift = "barenblatt-shift:";
  if (spec.rfind(shift, 0) == 0) {
    double x0;
    try {
      x0 = std::stod(spec.substr(shift.size()));
    } catch (...) {
      config_error("bad shift in --init " + spec);
    }
    const auto p = barenblatt(s, lambda, SupportSize::with_mass(1.0), x0);
    if (std::abs(x0) + p.R >= std::max(-g.x_min, g.x_max)) config_error("shifted profile does not fit the grid");
    return normalize(sample(p, g));
  }
  if (spec == "rho_inf" || spec == "ρ_∞" || spec == "steady") return discrete_minimizer(g, s, lambda, 1.0).rho;
  if (fs::exists(spec)) {
    GridDensity r = read_density_csv(spec);
    if (!(r.grid.n == g.n) || std::abs(r.grid.x_min - g.x_min) > 1e-9 || std::abs(r.grid.x_max - g.x_max) > 1e-9)
      config_error("initial CSV grid does not match --grid-n/--xmax");
    return normalize(GridDensity(g, r.values));
  }
  config_error("unknown --init " + spec + " (barenblatt, barenblatt-shift:<x0>, rho_inf, or a CSV path)");
}

// ---------------------------------------------------------------- simulate

json run_simulate(const SimulateOptions& o) {
  check_s(o.s);
  const double lambda = o.lambda ? *o.lambda : self_similar_lambda(o.s);
  if (!(lambda > 0.0)) config_error("--lambda must be positive");
  if (o.eps < 0.0) config_error("--eps must be nonnegative");
  if (o.grid_n < 16) config_error("--grid-n must be at least 16");
  if (!(o.xmax > 0.0)) config_error("--xmax must be positive");
  if (!(o.t_end > 0.0)) config_error("--t-end must be positive");
  SolverConfig cfg;
  cfg.s = o.s;
  cfg.lambda = lambda;
  cfg.eps = o.eps;
  cfg.grid = Grid::symmetric(o.xmax, o.grid_n);
  cfg.t_end = o.t_end;
  cfg.snapshot_every = o.snapshot_every;
  cfg.keep_snapshots = o.snapshots;
  if (o.dt.rfind("cfl:", 0) == 0) {
    cfg.dt = 0.0;
    try {
      cfg.cfl = std::stod(o.dt.substr(4));
    } catch (...) {
      config_error("bad --dt " + o.dt);
    }
    if (!(cfg.cfl > 0.0 && cfg.cfl <= 1.0)) config_error("cfl factor must lie in (0,1]");
  } else {
    try {
      cfg.dt = std::stod(o.dt);
    } catch (...) {
      config_error("bad --dt " + o.dt);
    }
    if (!(cfg.dt > 0.0)) config_error("--dt must be positive");
  }
  if (o.snapshot_every < 1) config_error("--snapshot-every must be >= 1");

  const GridDensity init = make_initial(o.init, cfg.grid, o.s, lambda);
  GridDensity target = discrete_minimizer(cfg.grid, o.s, lambda, 1.0).rho;
  if (o.eps > 0.0) {
    SolverConfig c2 = cfg;
    c2.dt = 0.0;
    c2.cfl = 0.5;
    target = steady_state_eps(c2, target).rho;
  }

  Trajectory tr;
  try {
    tr = integrate(cfg, init, target);
  } catch (const Error& e) {
    throw CommandFailure(kExitInvariant, std::string("solver invariant failed: ") + e.what());
  }

  fs::create_directories(o.out_dir);
  const std::string traj = (fs::path(o.out_dir) / "trajectory.csv").string();
  write_trajectory_csv(traj, tr);
  json outputs = {traj};
  if (o.snapshots) {
    const fs::path sd = fs::path(o.out_dir) / "snapshots";
    fs::create_directories(sd);
    for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
      std::ostringstream name;
      name << "snap_" << std::setw(5) << std::setfill('0') << k << ".csv";
      write_density_csv((sd / name.str()).string(), tr.snapshots[k]);
      outputs.push_back((sd / name.str()).string());
    }
  }

  double mass_dev = 0.0, min_rho = std::numeric_limits<double>::infinity();
  for (const auto& d : tr.diag) {
    mass_dev = std::max(mass_dev, std::abs(d.mass - tr.diag.front().mass));
    min_rho = std::min(min_rho, d.min_rho);
  }
  json fits = json::object();
  for (DecayQuantity q : {DecayQuantity::energy_gap, DecayQuantity::w2, DecayQuantity::l2, DecayQuantity::l1}) {
    std::optional<double> pref;
    const double g0 = tr.diag.front().E - tr.E_inf;
    if (q == DecayQuantity::w2) pref = std::sqrt(2.0 / lambda * std::max(g0, 0.0));
    try {
      const DecayFit f = fit_decay(tr.diag, tr.E_inf, q, FitWindow{0.5, o.t_end}, default_bound_rate(q, o.s, lambda), pref);
      fits[quantity_name(q)] = {{"rate", f.rate},           {"bound_rate", f.bound_rate},
                                {"prefactor", f.prefactor}, {"worst_ratio", f.worst_ratio},
                                {"bound_satisfied", f.bound_satisfied}, {"samples", f.samples}};
    } catch (const Error& e) {
      fits[quantity_name(q)] = {{"error", e.what()}};
    }
  }
  double res = 0.0;
  for (std::size_t k = 0; k < tr.step_t.size(); ++k)
    if (tr.step_t[k] >= 0.5) res = std::max(res, tr.step_residual[k]);

  json rep = {{"schema_version", kSchemaVersion},
              {"command", "simulate"},
              {"s", o.s},
              {"lambda", lambda},
              {"eps", o.eps},
              {"E_inf", tr.E_inf},
              {"E_eps_inf", tr.E_eps_inf},
              {"steps", tr.steps},
              {"mass_drift", mass_dev},
              {"min_rho", min_rho},
              {"max_clamped", tr.max_clamped},
              {"max_energy_residual", res},
              {"decay", fits}};
  write_json((fs::path(o.out_dir) / "report.json").string(), rep);
  rep["outputs"] = outputs;
  if (mass_dev > 1e-12) throw CommandFailure(kExitInvariant, "mass conservation violated");
  if (min_rho < 0.0) throw CommandFailure(kExitInvariant, "positivity violated");
  return rep;
}

// ---------------------------------------------------------------- verify

namespace {

struct Worst {
  double margin = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
  bool pass = true;
  void take(double m, std::uint64_t sd, bool ok) {
    if (m < margin) {
      margin = m;
      seed = sd;
    }
    pass = pass && ok;
  }
  json to_json() const { return {{"worst_margin", num(margin)}, {"worst_seed", seed}, {"pass", pass}}; }
};

}  // namespace

json run_verify(const VerifyOptions& o) {
  check_s(o.s);
  if (!(o.lambda > 0.0)) config_error("--lambda must be positive");
  if (o.samples < 1) config_error("--samples must be positive");
  if (o.eps < 0.0 || (o.eps > 0.0 && !(o.eps < o.lambda / (2.0 * std::numbers::pi))))
    config_error("--eps must satisfy 0 <= eps < lambda/(2 pi)");
  static const std::vector<std::string> known{"hwi", "lsi", "talagrand", "gns", "lemmaE", "interp", "remainder", "virial"};
  for (const auto& s : o.suites)
    if (std::find(known.begin(), known.end(), s) == known.end()) config_error("unknown suite " + s);
  auto has = [&](const char* s) { return std::find(o.suites.begin(), o.suites.end(), s) != o.suites.end(); };
  const bool ineq = has("hwi") || has("lsi") || has("talagrand") || has("lemmaE");
  if ((has("gns") || has("interp") || has("virial")) && !(o.s < 0.5)) config_error("gns, interp and virial need s < 1/2");

  const Grid g = Grid::symmetric(o.xmax, o.grid_n);
  GridDensity target = discrete_minimizer(g, o.s, o.lambda, 1.0).rho;
  const GridDensity rho_inf = target;
  if (o.eps > 0.0 && ineq) {
    SolverConfig c;
    c.s = o.s;
    c.lambda = o.lambda;
    c.eps = o.eps;
    c.grid = g;
    target = steady_state_eps(c, target).rho;
  }
  const TargetState T = make_target(target, o.s, o.lambda, o.eps);

  Worst w_hwi, w_lsi, w_tal, w_lem, w_t1, w_t2, w_t3, w_rem, w_vir, w_gns, w_int;
  json samples = json::array();
  const double alpha = 0.5, r = 0.2;
  double gns_ref = 0.0;
  json gns_family = json::array();
  if (has("gns")) {
    const Grid gf = Grid::symmetric(2.5, 4096);
    double lo = 1e300, hi = -1e300;
    for (double A : {0.5, 1.0, 2.0})
      for (double R : {0.5, 1.0, 2.0})
        for (double x0 : {0.0, 0.3}) {
          BarenblattProfile p = barenblatt(o.s, o.lambda, SupportSize::with_radius(R), x0);
          p.K = A;
          const double ratio = gns_ratio(sample(p, gf), o.s);
          lo = std::min(lo, ratio);
          hi = std::max(hi, ratio);
          gns_family.push_back({{"A", A}, {"R", R}, {"x0", x0}, {"ratio", ratio}});
        }
    gns_ref = lo;
    const double spread = (hi - lo) / lo;
    w_gns.take(0.005 - spread, 0, spread <= 0.005);
  }
  double interp_C = 0.0;
  for (int k = 0; k < o.samples; ++k) {
    const std::uint64_t sd = o.seed + static_cast<std::uint64_t>(k);
    const GridDensity rho = random_density(corpus_spec(sd), g);
    json js = {{"seed", sd}};
    if (ineq) {
      const InequalityReport rep = inequality_report(rho, T);
      const double tol = rep.tolerance;
      w_hwi.take(rep.hwi_gap / tol, sd, rep.hwi_gap >= -tol);
      w_lsi.take(rep.lsi_gap / tol, sd, rep.lsi_gap >= -tol);
      w_tal.take(rep.talagrand_gap / tol, sd, rep.talagrand_gap >= -tol);
      if (o.eps == 0.0) w_lem.take(rep.lemmaE_gap / tol, sd, rep.lemmaE_gap >= -tol);
      w_t1.take(rep.T1 / tol, sd, rep.T1 >= -tol);
      w_t3.take(rep.T3 / tol, sd, rep.T3 >= -tol);
      if (o.eps == 0.0)
        w_t2.take(-std::abs(rep.T2), sd, std::abs(rep.T2) <= 1e-12);
      else
        w_t2.take(rep.T2 / tol, sd, rep.T2 >= -tol);
      if (o.per_sample)
        js.update({{"energy_gap", rep.energy_gap}, {"I", rep.dissipation}, {"W2", rep.w2},
                   {"hwi_gap", rep.hwi_gap}, {"lsi_gap", rep.lsi_gap}, {"talagrand_gap", rep.talagrand_gap},
                   {"lemmaE_gap", rep.lemmaE_gap}, {"T1", rep.T1}, {"T2", rep.T2}, {"T3", rep.T3}});
    }
    if (has("remainder")) {
      const EnergyModel em(g, o.s, o.lambda, 0.0);
      const double R = em.remainder_R(rho.values);
      const double scale = std::max(1.0, em.dissipation(rho.values));
      w_rem.take(R / scale, sd, R >= -1e-10 * scale);
      if (o.per_sample) js["R"] = R;
    }
    if (has("virial")) {
      const Virial v = virial_check(rho, o.s);
      const double rel = std::abs(v.lhs - v.rhs) / std::abs(v.rhs);
      w_vir.take(1e-3 - rel, sd, rel <= 1e-3);
      if (o.per_sample) js["virial_rel_err"] = rel;
    }
    if (has("gns")) {
      const double ratio = gns_ratio(rho, o.s);
      const double m = ratio / gns_ref - (1.0 - 1e-3);
      w_gns.take(m, sd, m >= 0.0);
      if (o.per_sample) js["gns_ratio"] = ratio;
    }
    if (has("interp")) {
      const InterpResult ir = interp_inequality(g, rho.values - rho_inf.values, o.s, alpha, r);
      interp_C = std::max(interp_C, ir.ratio());
      if (o.per_sample) js["interp_ratio"] = ir.ratio();
    }
    samples.push_back(js);
  }
  json suites = json::object();
  if (has("hwi")) {
    suites["hwi"] = w_hwi.to_json();
    suites["T1"] = w_t1.to_json();
    suites["T2"] = w_t2.to_json();
    suites["T3"] = w_t3.to_json();
  }
  if (has("lsi")) suites["lsi"] = w_lsi.to_json();
  if (has("talagrand")) suites["talagrand"] = w_tal.to_json();
  if (has("lemmaE") && o.eps == 0.0) suites["lemmaE"] = w_lem.to_json();
  if (has("remainder")) suites["remainder"] = w_rem.to_json();
  if (has("virial")) suites["virial"] = w_vir.to_json();
  if (has("gns")) {
    suites["gns"] = w_gns.to_json();
    suites["gns"]["family"] = gns_family;
    suites["gns"]["barenblatt_ratio"] = gns_ref;
  }
  if (has("interp")) {
    const auto sg = interp_exponents(o.s, alpha, r);
    suites["interp"] = {{"alpha", alpha}, {"r", r}, {"sigmas", {sg[0], sg[1], sg[2]}},
                        {"empirical_constant", interp_C}, {"pass", std::isfinite(interp_C)}};
  }
  bool pass = true;
  std::string first_fail;
  for (auto& [name, v] : suites.items()) {
    if (!v.value("pass", true)) {
      pass = false;
      if (first_fail.empty())
        first_fail = name + " (sample seed " + std::to_string(v.value("worst_seed", std::uint64_t{0})) + ")";
    }
  }
  json rep = {{"schema_version", kSchemaVersion},
              {"command", "verify"},
              {"corpus", {{"seed", o.seed}, {"samples", o.samples}, {"grid_n", o.grid_n}, {"xmax", o.xmax}}},
              {"params", {{"s", o.s}, {"lambda", o.lambda}, {"eps", o.eps}}},
              {"suites", suites},
              {"pass", pass}};
  if (o.per_sample) rep["samples"] = samples;
  if (!pass) rep["first_failure"] = first_fail;
  return rep;
}

// ---------------------------------------------------------------- riesz-convergence

namespace {

// ∫ k(x-y) ρ(y) dy by tanh-sinh quadrature, split at the singular point.
double quadrature_potential(const BarenblattProfile& p, const KernelCase& kc, double x) {
  boost::math::quadrature::tanh_sinh<double> ts;
  auto k = [&](double z) {
    const double a = std::abs(z);
    return kc.regime == Regime::logarithmic ? -std::log(a) / std::numbers::pi : kc.c * std::pow(a, 2.0 * kc.s - 1.0);
  };
  const double lo = p.x0 - p.R, hi = p.x0 + p.R;
  auto f = [&](double y) { return y == x ? 0.0 : k(x - y) * p(y); };
  double total = 0.0;
  if (x > lo) total += ts.integrate(f, lo, std::min(x, hi));
  if (x < hi) total += ts.integrate(f, std::max(x, lo), hi);
  return total;
}

}  // namespace

std::vector<ConvergenceRow> run_riesz_convergence(const ConvergenceOptions& o) {
  check_s(o.s);
  if (o.levels < 2) config_error("--levels must be at least 2");
  if (o.base_n < 16 || o.base_n % 4) config_error("--base-n must be a multiple of 4, at least 16");
  const double lambda = 0.4;
  const BarenblattProfile p = barenblatt(o.s, lambda, SupportSize::with_radius(1.0));
  const KernelCase kc = riesz_constant(o.s);
  std::vector<ConvergenceRow> rows;
  RieszConfig cfg;
  cfg.s = o.s;
  for (int l = 0; l < o.levels; ++l) {
    const Index n = o.base_n << l;
    const Grid g = Grid::symmetric(2.0, n);
    const GridDensity rho = sample(p, g);
    const Vec pot = riesz_potential(rho, cfg);
    double emax = 0.0, rmax = 0.0, e2 = 0.0, r2 = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double x = g.x(i);
      if (std::abs(x) > 0.9 * p.R) continue;
      const double ref = o.s < 0.5 ? closed_form_potential(p, x) : quadrature_potential(p, kc, x);
      const double d = pot[i] - ref;
      emax = std::max(emax, std::abs(d));
      rmax = std::max(rmax, std::abs(ref));
      e2 += d * d;
      r2 += ref * ref;
    }
    ConvergenceRow row;
    row.h = g.h();
    row.err_Linf = emax / rmax;
    row.err_L2 = std::sqrt(e2 / r2);
    row.order = rows.empty() ? std::numeric_limits<double>::quiet_NaN()
                             : std::log(rows.back().err_Linf / row.err_Linf) / std::log(rows.back().h / row.h);
    rows.push_back(row);
  }
  return rows;
}

void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows) {
  os << "h,err_Linf,err_L2,order\n" << std::setprecision(17);
  for (const auto& r : rows) {
    os << r.h << ',' << r.err_Linf << ',' << r.err_L2 << ',';
    if (std::isfinite(r.order)) os << r.order;
    os << '\n';
  }
}

// ---------------------------------------------------------------- steady

json run_steady(const SteadyOptions& o) {
  check_s(o.s);
  const double lambda = o.lambda ? *o.lambda : self_similar_lambda(o.s);
  if (!(lambda > 0.0)) config_error("--lambda must be positive");
  if (o.mass && o.radius) config_error("give --mass or --radius, not both");
  const SupportSize size = o.radius ? SupportSize::with_radius(*o.radius) : SupportSize::with_mass(o.mass ? *o.mass : 1.0);
  if (!(size.value > 0.0)) config_error("mass and radius must be positive");
  const BarenblattProfile p = barenblatt(o.s, lambda, size, o.x0);
  if (std::abs(o.x0) + p.R >= o.xmax) config_error("profile support does not fit inside --xmax");
  const Grid g = Grid::symmetric(o.xmax, o.grid_n);
  const GridDensity rho = sample(p, g);
  fs::create_directories(o.out_dir);
  const std::string csv = (fs::path(o.out_dir) / "profile.csv").string();
  write_density_csv(csv, rho);
  const EulerLagrangeReport el = euler_lagrange_check(normalize(rho), o.s, lambda);
  json rep = {{"schema_version", kSchemaVersion},
              {"command", "steady"},
              {"s", o.s},
              {"lambda", lambda},
              {"R", p.R},
              {"M", p.M},
              {"K", p.K},
              {"x0", p.x0},
              {"C_star", o.s < 0.5 ? json(c_star(p)) : json(nullptr)},
              {"grid_mass", rho.mass},
              {"euler_lagrange", {{"C_star", el.C_star},
                                  {"max_dev_on_support", el.max_dev_on_support},
                                  {"min_excess_off_support", num(el.min_excess_off_support)}}}};
  if (o.s < 0.5) rep["steady_energy"] = steady_energy(p);
  write_json((fs::path(o.out_dir) / "steady.json").string(), rep);
  rep["outputs"] = {csv};
  return rep;
}

// ---------------------------------------------------------------- decay-fit

json run_decay_fit(const DecayFitOptions& o) {
  if (o.traj.empty()) config_error("--traj is required");
  DecayQuantity q;
  try {
    q = parse_quantity(o.quantity);
  } catch (const Error& e) {
    config_error(e.what());
  }
  std::vector<Diagnostics> diag;
  try {
    diag = read_trajectory_csv(o.traj);
  } catch (const Error& e) {
    config_error(e.what());
  }
  json rep_in;
  const fs::path side = fs::path(o.traj).parent_path() / "report.json";
  if (fs::exists(side)) {
    std::ifstream f(side);
    try {
      f >> rep_in;
    } catch (...) {
      rep_in = json();
    }
  }
  auto from_report = [&](const char* key) -> std::optional<double> {
    if (rep_in.is_object() && rep_in.contains(key) && rep_in[key].is_number()) return rep_in[key].get<double>();
    return std::nullopt;
  };
  const std::optional<double> e_inf = o.e_inf ? o.e_inf : from_report("E_inf");
  if (q == DecayQuantity::energy_gap && !e_inf) config_error("--e-inf is required for the energy gap");
  double rate;
  if (o.bound_rate) {
    rate = *o.bound_rate;
  } else {
    const auto s = o.s ? o.s : from_report("s");
    const auto lam = o.lambda ? o.lambda : from_report("lambda");
    if (!s || !lam) config_error("--bound-rate or both --s and --lambda are required");
    rate = default_bound_rate(q, *s, *lam);
  }
  std::optional<double> pref = o.prefactor;
  if (!pref && q == DecayQuantity::w2 && e_inf) {
    const auto lam = o.lambda ? o.lambda : from_report("lambda");
    if (lam) pref = std::sqrt(2.0 / *lam * std::max(diag.front().E - *e_inf, 0.0));
  }
  DecayFit f;
  try {
    f = fit_decay(diag, e_inf.value_or(0.0), q, FitWindow{o.t0, o.t1}, rate, pref, o.tol);
  } catch (const Error& e) {
    throw CommandFailure(kExitInvariant, e.what());
  }
  return {{"schema_version", kSchemaVersion},
          {"command", "decay-fit"},
          {"quantity", quantity_name(q)},
          {"window", {o.t0, num(o.t1)}},
          {"rate", f.rate},
          {"bound_rate", f.bound_rate},
          {"prefactor", f.prefactor},
          {"tol", f.tol},
          {"worst_ratio", f.worst_ratio},
          {"samples", f.samples},
          {"bound_satisfied", f.bound_satisfied}};
}

// ---------------------------------------------------------------- CLI

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

double parse_lambda(const std::string& v, double s, std::optional<double>* out) {
  if (v == "auto") {
    out->reset();
    return self_similar_lambda(s);
  }
  try {
    *out = std::stod(v);
  } catch (...) {
    config_error("--lambda must be a number or 'auto'");
  }
  return **out;
}

json manifest(const std::string& command, const json& config, std::uint64_t seed, double wall, const json& outputs) {
  return {{"schema_version", kSchemaVersion}, {"command", command},          {"config", config},
          {"seed", seed},                     {"tool_version", tool_version()}, {"wall_clock_seconds", wall},
          {"outputs", outputs}};
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fractional porous medium laboratory"};
  app.set_config("--config", "", "key = value configuration file; flags win on conflict");
  app.require_subcommand(1);
  unsigned threads = 1;
  app.add_option("--threads", threads, "worker threads for row-parallel loops")->check(CLI::PositiveNumber);

  SimulateOptions so;
  std::string so_lambda = "auto";
  auto* sim = app.add_subcommand("simulate", "evolve the confined equation and record diagnostics");
  sim->add_option("--s", so.s, "fractional order");
  sim->add_option("--lambda", so_lambda, "confinement strength or 'auto' = 1/(3-2s)");
  sim->add_option("--eps", so.eps, "linear diffusion strength");
  sim->add_option("--grid-n", so.grid_n, "cell count");
  sim->add_option("--xmax", so.xmax, "half width of the domain");
  sim->add_option("--dt", so.dt, "time step, or cfl:<factor>");
  sim->add_option("--t-end", so.t_end, "final time");
  sim->add_option("--init", so.init, "barenblatt, barenblatt-shift:<x0>, rho_inf, or CSV path");
  sim->add_option("--snapshot-every", so.snapshot_every, "steps between diagnostics");
  sim->add_flag("!--no-snapshots", so.snapshots, "skip snapshot CSVs");
  sim->add_option("--out-dir", so.out_dir, "output directory");

  VerifyOptions vo;
  std::string vo_suite = "hwi,lsi,talagrand,lemmaE";
  std::string vo_lambda = "0.4";
  std::string vo_out;
  auto* ver = app.add_subcommand("verify", "check functional inequalities on a seeded corpus");
  ver->add_option("--suite", vo_suite, "comma list of hwi,lsi,talagrand,gns,lemmaE,interp,remainder,virial");
  ver->add_option("--samples", vo.samples, "corpus size");
  ver->add_option("--seed", vo.seed, "corpus seed");
  ver->add_option("--s", vo.s, "fractional order");
  ver->add_option("--lambda", vo_lambda, "confinement strength or 'auto'");
  ver->add_option("--eps", vo.eps, "linear diffusion strength");
  ver->add_option("--grid-n", vo.grid_n, "cell count");
  ver->add_option("--xmax", vo.xmax, "half width of the domain");
  ver->add_option("--out", vo_out, "JSON report path (stdout if empty)");

  ConvergenceOptions co;
  std::string co_out;
  auto* rc = app.add_subcommand("riesz-convergence", "refinement study of the Riesz potential on the steady profile");
  rc->add_option("--s", co.s, "fractional order");
  rc->add_option("--levels", co.levels, "number of grids, doubling from --base-n");
  rc->add_option("--base-n", co.base_n, "coarsest cell count");
  rc->add_option("--out", co_out, "CSV path (stdout if empty)");

  SteadyOptions sto;
  std::string st_lambda = "auto";
  double st_mass = 0.0, st_radius = 0.0;
  auto* st = app.add_subcommand("steady", "write the steady profile and its constants");
  st->add_option("--s", sto.s, "fractional order");
  st->add_option("--lambda", st_lambda, "confinement strength or 'auto'");
  auto* o_mass = st->add_option("--mass", st_mass, "total mass");
  auto* o_rad = st->add_option("--radius", st_radius, "support radius");
  st->add_option("--x0", sto.x0, "center");
  st->add_option("--grid-n", sto.grid_n, "cell count");
  st->add_option("--xmax", sto.xmax, "half width of the domain");
  st->add_option("--out-dir", sto.out_dir, "output directory");

  DecayFitOptions dfo;
  std::string window = "0.5:inf";
  double df_einf = 0, df_rate = 0, df_pref = 0, df_s = 0, df_lam = 0;
  auto* df = app.add_subcommand("decay-fit", "fit an exponential rate and check the envelope");
  df->add_option("--traj", dfo.traj, "trajectory CSV")->required();
  df->add_option("--quantity", dfo.quantity, "E, W2, L2, L1 or I");
  df->add_option("--window", window, "t0:t1");
  auto* o_einf = df->add_option("--e-inf", df_einf, "steady energy (default: report.json beside the CSV)");
  auto* o_rate = df->add_option("--bound-rate", df_rate, "envelope rate (default from s and lambda)");
  auto* o_pref = df->add_option("--prefactor", df_pref, "envelope prefactor (default q(0))");
  auto* o_s = df->add_option("--s", df_s, "fractional order");
  auto* o_lam = df->add_option("--lambda", df_lam, "confinement strength");
  df->add_option("--tol", dfo.tol, "prefactor slack");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kExitConfig;
  }
  set_num_threads(threads);

  const auto t0 = std::chrono::steady_clock::now();
  auto wall = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  try {
    if (*sim) {
      check_s(so.s);
      parse_lambda(so_lambda, so.s, &so.lambda);
      const json rep = run_simulate(so);
      const json cfg = {{"s", so.s},           {"lambda", so_lambda},     {"eps", so.eps},
                        {"grid_n", so.grid_n}, {"xmax", so.xmax},         {"dt", so.dt},
                        {"t_end", so.t_end},   {"init", so.init},         {"snapshot_every", so.snapshot_every},
                        {"snapshots", so.snapshots}, {"out_dir", so.out_dir}, {"threads", threads}};
      write_json((fs::path(so.out_dir) / "manifest.json").string(), manifest("simulate", cfg, 0, wall(), rep["outputs"]));
      out << "wrote " << so.out_dir << '\n';
      return kExitOk;
    }
    if (*ver) {
      check_s(vo.s);
      std::optional<double> lam;
      vo.lambda = parse_lambda(vo_lambda, vo.s, &lam);
      vo.suites = split_csv(vo_suite);
      const json rep = run_verify(vo);
      if (vo_out.empty()) {
        out << rep.dump(2) << '\n';
      } else {
        write_json(vo_out, rep);
        const json cfg = {{"suite", vo_suite}, {"samples", vo.samples}, {"seed", vo.seed}, {"s", vo.s},
                          {"lambda", vo_lambda}, {"eps", vo.eps}, {"grid_n", vo.grid_n}, {"xmax", vo.xmax},
                          {"threads", threads}};
        const fs::path mp = fs::path(vo_out).parent_path() / (fs::path(vo_out).stem().string() + ".manifest.json");
        write_json(mp.string(), manifest("verify", cfg, vo.seed, wall(), {vo_out}));
      }
      if (!rep["pass"].get<bool>()) {
        err << "inequality violation: " << rep["first_failure"].get<std::string>() << '\n';
        return kExitInvariant;
      }
      return kExitOk;
    }
    if (*rc) {
      const auto rows = run_riesz_convergence(co);
      if (co_out.empty()) {
        write_convergence_csv(out, rows);
      } else {
        std::ofstream f(co_out);
        if (!f) config_error("cannot write " + co_out);
        write_convergence_csv(f, rows);
      }
      if (!(rows.back().order >= 1.0)) {
        err << "observed order " << rows.back().order << " < 1 at the finest pair\n";
        return kExitInvariant;
      }
      return kExitOk;
    }
    if (*st) {
      check_s(sto.s);
      parse_lambda(st_lambda, sto.s, &sto.lambda);
      if (*o_mass) sto.mass = st_mass;
      if (*o_rad) sto.radius = st_radius;
      const json rep = run_steady(sto);
      const json cfg = {{"s", sto.s}, {"lambda", st_lambda}, {"mass", *o_mass ? json(st_mass) : json(nullptr)},
                        {"radius", *o_rad ? json(st_radius) : json(nullptr)}, {"x0", sto.x0},
                        {"grid_n", sto.grid_n}, {"xmax", sto.xmax}, {"out_dir", sto.out_dir}};
      write_json((fs::path(sto.out_dir) / "manifest.json").string(), manifest("steady", cfg, 0, wall(), rep["outputs"]));
      out << rep.dump(2) << '\n';
      return kExitOk;
    }
    if (*df) {
      const auto colon = window.find(':');
      if (colon == std::string::npos) config_error("--window must be t0:t1");
      try {
        dfo.t0 = std::stod(window.substr(0, colon));
        const std::string hi = window.substr(colon + 1);
        dfo.t1 = (hi == "inf" || hi.empty()) ? 1e300 : std::stod(hi);
      } catch (const std::exception&) {
        config_error("--window must be t0:t1");
      }
      if (*o_einf) dfo.e_inf = df_einf;
      if (*o_rate) dfo.bound_rate = df_rate;
      if (*o_pref) dfo.prefactor = df_pref;
      if (*o_s) dfo.s = df_s;
      if (*o_lam) dfo.lambda = df_lam;
      const json rep = run_decay_fit(dfo);
      out << rep.dump(2) << '\n';
      return rep["bound_satisfied"].get<bool>() ? kExitOk : kExitInvariant;
    }
  } catch (const CommandFailure& e) {
    err << e.what() << '\n';
    return e.code();
  } catch (const Error& e) {
    err << e.what() << '\n';
    const bool config = e.code() == Errc::OutOfRange || e.code() == Errc::NonPositive || e.code() == Errc::Io ||
                        e.code() == Errc::EpsilonOutOfRange || e.code() == Errc::ParameterOrder;
    return config ? kExitConfig : kExitInvariant;
  }
  return kExitConfig;
}

}  // namespace fpme
