#include "fpme/evolve.hpp"

#include "fpme/transport.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace fpme {

namespace {

// Bernoulli function z/(e^z - 1).
double bernoulli(double z) {
  if (std::abs(z) < 1e-8) return 1.0 - 0.5 * z;
  if (z > 700.0) return 0.0;
  return z / std::expm1(z);
}

double safe_log(double r) { return std::log(std::max(r, kLogFloor)); }

void validate(const SolverConfig& c) {
  if (!(c.s > 0.0 && c.s < 1.0)) throw Error(Errc::OutOfRange, "s must lie in (0,1)");
  if (!(c.lambda > 0.0)) throw Error(Errc::NonPositive, "lambda must be positive");
  if (!(c.eps >= 0.0)) throw Error(Errc::OutOfRange, "eps must be nonnegative");
  if (!(c.dt >= 0.0)) throw Error(Errc::OutOfRange, "dt must be nonnegative");
  if (!(c.cfl > 0.0 && c.cfl <= 1.0)) throw Error(Errc::OutOfRange, "cfl must lie in (0,1]");
  if (!(c.t_end >= 0.0)) throw Error(Errc::OutOfRange, "t_end must be nonnegative");
  if (c.snapshot_every < 1) throw Error(Errc::OutOfRange, "snapshot_every must be >= 1");
}

}  // namespace

FvSolver::FvSolver(const SolverConfig& cfg) : cfg_(cfg), model_((validate(cfg), cfg.grid), cfg.s, cfg.lambda, cfg.eps) {
  half_x2_.resize(cfg.grid.n);
  for (Index i = 0; i < cfg.grid.n; ++i) half_x2_[i] = 0.5 * cfg.lambda * cfg.grid.x(i) * cfg.grid.x(i);
}

void FvSolver::fluxes(const Vec& rho, const Vec& p, Vec& F, Vec& a, Vec& b) const {
  const Index n = rho.size();
  const double h = cfg_.grid.h();
  const double eps = cfg_.eps;
  F.resize(n - 1);
  a.resize(n - 1);
  b.resize(n - 1);
  for (Index i = 0; i + 1 < n; ++i) {
    const double dphi = (p[i + 1] + half_x2_[i + 1]) - (p[i] + half_x2_[i]);
    if (eps == 0.0) {
      const double v = -dphi / h;
      a[i] = std::max(v, 0.0);
      b[i] = std::max(-v, 0.0);
    } else {
      const double z = dphi / eps;
      a[i] = eps / h * bernoulli(z);
      b[i] = eps / h * bernoulli(-z);
    }
    F[i] = a[i] * rho[i] - b[i] * rho[i + 1];
  }
}

double FvSolver::face_dissipation(const Vec& rho, const Vec& p, const Vec& F) const {
  double acc = 0.0;
  for (Index i = 0; i + 1 < rho.size(); ++i) {
    if (F[i] == 0.0) continue;
    double dxi = (p[i + 1] + half_x2_[i + 1]) - (p[i] + half_x2_[i]);
    if (cfg_.eps > 0.0) dxi += cfg_.eps * (safe_log(rho[i + 1]) - safe_log(rho[i]));
    acc -= F[i] * dxi;
  }
  return acc;
}

double FvSolver::face_dissipation(const Vec& rho) const {
  const Vec p = model_.riesz().potential(rho);
  Vec F, a, b;
  fluxes(rho, p, F, a, b);
  return face_dissipation(rho, p, F);
}

double FvSolver::stable_dt(const Vec& rho) const { return stable_dt(rho, model_.riesz().potential(rho)); }

double FvSolver::stable_dt(const Vec& rho, const Vec& p) const {
  Vec F, a, b;
  fluxes(rho, p, F, a, b);
  const Index n = rho.size();
  const double h = cfg_.grid.h();
  double out = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double r = (i + 1 < n ? a[i] : 0.0) + (i > 0 ? b[i - 1] : 0.0);
    out = std::max(out, r);
  }
  double dt = out > 0.0 ? h / out : 1e300;
  // fractional-diffusion stiffness of the linearized flow at the grid scale
  const double stiff = 4.0 * rho.maxCoeff() * model_.riesz().symbol_at_nyquist() / (h * h);
  if (stiff > 0.0) dt = std::min(dt, 2.0 / stiff);
  return dt;
}

Vec FvSolver::step(const Vec& rho, double dt, StepInfo* info) const {
  return step(rho, model_.riesz().potential(rho), dt, info, nullptr);
}

Vec FvSolver::step(const Vec& rho, const Vec& p, double dt, StepInfo* info, Vec* p_out) const {
  const Index n = rho.size();
  const double h = cfg_.grid.h();
  Vec F, a, b;
  fluxes(rho, p, F, a, b);
  Vec out = rho;
  for (Index i = 0; i + 1 < n; ++i) {
    out[i] -= dt / h * F[i];
    out[i + 1] += dt / h * F[i];
  }
  double clamped = 0.0;
  for (Index i = 0; i < n; ++i) {
    if (out[i] < 0.0) {
      clamped -= out[i];
      out[i] = 0.0;
    }
  }
  clamped *= h;
  if (clamped > 1e-12) throw Error(Errc::PositivityLoss, "explicit step clamped more than 1e-12 mass");
  if (info || p_out) {
    Vec p1 = model_.riesz().potential(out);
    double dE = 0.0;
    for (Index i = 0; i < n; ++i) {
      dE += (0.5 * (p[i] + p1[i]) + half_x2_[i]) * (out[i] - rho[i]);
      if (cfg_.eps > 0.0) {
        const double e1 = out[i] > 0.0 ? out[i] * std::log(out[i]) : 0.0;
        const double e0 = rho[i] > 0.0 ? rho[i] * std::log(rho[i]) : 0.0;
        dE += cfg_.eps * (e1 - e0);
      }
    }
    if (info) {
      info->dt = dt;
      info->dE = h * dE;
      info->face_dissipation = face_dissipation(rho, p, F);
      info->clamped = clamped;
    }
    if (p_out) *p_out = std::move(p1);
  }
  return out;
}

GridDensity fv_step(const GridDensity& rho, const SolverConfig& cfg) {
  const FvSolver solver(cfg);
  const double lim = solver.stable_dt(rho.values);
  double dt = cfg.dt;
  if (dt == 0.0)
    dt = cfg.cfl * lim;
  else if (dt > lim)
    throw Error(Errc::CflViolation, "dt exceeds the stability bound");
  return GridDensity(rho.grid, solver.step(rho.values, dt));
}

Diagnostics diagnose(const EnergyModel& eps_model, const EnergyModel& plain_model, const GridDensity& rho,
                     const GridDensity& target, double t) {
  Diagnostics d;
  d.t = t;
  const double h = rho.grid.h();
  d.E = plain_model.energy(rho.values).total;
  d.E_eps = eps_model.eps() > 0.0 ? eps_model.energy(rho.values).total : d.E;
  d.I = plain_model.dissipation(rho.values);
  d.I_eps = eps_model.eps() > 0.0 ? eps_model.dissipation(rho.values) : d.I;
  d.W2 = w2(normalize(rho), normalize(target));
  const Vec diff = rho.values - target.values;
  d.L2 = std::sqrt(h * diff.squaredNorm());
  d.L1 = h * diff.cwiseAbs().sum();
  d.mass = rho.mass;
  d.m2 = moment(rho, 2);
  d.min_rho = rho.values.minCoeff();
  return d;
}

Trajectory integrate(const SolverConfig& cfg, const GridDensity& init, const GridDensity& target) {
  if (!(init.grid == cfg.grid) || !(target.grid == cfg.grid))
    throw Error(Errc::OutOfRange, "initial data and target must live on the solver grid");
  const FvSolver solver(cfg);
  const EnergyModel plain(cfg.grid, cfg.s, cfg.lambda, 0.0);
  const EnergyModel& model = solver.model();
  Trajectory tr;
  tr.E_inf = plain.energy(target.values).total;
  tr.E_eps_inf = model.energy(target.values).total;

  Vec rho = init.values;
  Vec p = model.riesz().potential(rho);
  double t = 0.0;
  auto record = [&](double time) {
    const GridDensity g(cfg.grid, rho);
    tr.diag.push_back(diagnose(model, plain, g, target, time));
    if (cfg.keep_snapshots) tr.snapshots.push_back(g);
  };
  record(0.0);
  const bool fixed = cfg.dt > 0.0;
  const std::size_t nsteps = fixed ? static_cast<std::size_t>(std::llround(cfg.t_end / cfg.dt)) : 0;
  std::size_t k = 0;
  while (fixed ? k < nsteps : t < cfg.t_end * (1.0 - 1e-14)) {
    const double lim = solver.stable_dt(rho, p);
    double dt;
    if (fixed) {
      dt = cfg.dt;
      if (dt > lim) throw Error(Errc::CflViolation, "dt exceeds the stability bound at t = " + std::to_string(t));
    } else {
      dt = std::min(cfg.cfl * lim, cfg.t_end - t);
    }
    StepInfo info;
    Vec p_next;
    rho = solver.step(rho, p, dt, &info, &p_next);
    p = std::move(p_next);
    if (info.dE > 1e-10) throw Error(Errc::EnergyIncrease, "energy increased at t = " + std::to_string(t));
    tr.max_clamped = std::max(tr.max_clamped, info.clamped);
    if (info.face_dissipation > 0.0) {
      tr.step_t.push_back(t);
      tr.step_residual.push_back(std::abs(info.dE / dt + info.face_dissipation) / info.face_dissipation);
    }
    ++k;
    t = fixed ? static_cast<double>(k) * cfg.dt : t + dt;
    if (k % static_cast<std::size_t>(cfg.snapshot_every) == 0 || (fixed ? k == nsteps : t >= cfg.t_end * (1.0 - 1e-14)))
      record(t);
  }
  tr.steps = k;
  return tr;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream f(path);
  if (!f) throw Error(Errc::Io, "cannot write " + path);
  f << "t,E,E_eps,I,I_eps,W2,L2,L1,mass,m2,min_rho\n" << std::setprecision(17);
  for (const auto& d : traj.diag)
    f << d.t << ',' << d.E << ',' << d.E_eps << ',' << d.I << ',' << d.I_eps << ',' << d.W2 << ',' << d.L2 << ','
      << d.L1 << ',' << d.mass << ',' << d.m2 << ',' << d.min_rho << '\n';
}

std::vector<Diagnostics> read_trajectory_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::Io, "cannot read " + path);
  std::string line;
  std::getline(f, line);
  if (line != "t,E,E_eps,I,I_eps,W2,L2,L1,mass,m2,min_rho") throw Error(Errc::Io, path + ": unexpected header");
  std::vector<Diagnostics> out;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    double v[11];
    std::string cell;
    for (double& x : v) {
      if (!std::getline(ss, cell, ',')) throw Error(Errc::Io, path + ": short row");
      x = std::stod(cell);
    }
    out.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10]});
  }
  return out;
}

DecayQuantity parse_quantity(const std::string& name) {
  if (name == "E" || name == "energy") return DecayQuantity::energy_gap;
  if (name == "W2") return DecayQuantity::w2;
  if (name == "L2") return DecayQuantity::l2;
  if (name == "L1") return DecayQuantity::l1;
  if (name == "I") return DecayQuantity::dissipation;
  throw Error(Errc::OutOfRange, "unknown quantity " + name + " (E, W2, L2, L1, I)");
}

const char* quantity_name(DecayQuantity q) {
  switch (q) {
    case DecayQuantity::energy_gap: return "E";
    case DecayQuantity::w2: return "W2";
    case DecayQuantity::l2: return "L2";
    case DecayQuantity::l1: return "L1";
    case DecayQuantity::dissipation: return "I";
  }
  return "?";
}

double default_bound_rate(DecayQuantity q, double s, double lambda) {
  const double alpha = 1.0 - s, r = 0.45 * alpha;
  const double sigma1 = r / (s + r);
  switch (q) {
    case DecayQuantity::energy_gap: return 2.0 * lambda;
    case DecayQuantity::w2: return lambda;
    case DecayQuantity::l2: return lambda * sigma1;
    case DecayQuantity::l1: return 0.8 * lambda * sigma1;
    case DecayQuantity::dissipation: return 2.0 * lambda;
  }
  return 0.0;
}

DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& q, FitWindow window, double bound_rate,
                   double prefactor, double tol) {
  DecayFit f;
  f.bound_rate = bound_rate;
  f.prefactor = prefactor;
  f.tol = tol;
  double st = 0, sy = 0, stt = 0, sty = 0;
  std::size_t m = 0;
  bool ok = true;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] < window.t0 || t[k] > window.t1) continue;
    if (!(q[k] > 0.0)) throw Error(Errc::NonpositiveQuantity, "quantity must be positive inside the window");
    const double y = std::log(q[k]);
    st += t[k];
    sy += y;
    stt += t[k] * t[k];
    sty += t[k] * y;
    ++m;
    const double ratio = q[k] / (prefactor * std::exp(-bound_rate * t[k]));
    f.worst_ratio = std::max(f.worst_ratio, ratio);
    if (ratio > 1.0 + tol) ok = false;
  }
  if (m < 10) throw Error(Errc::InsufficientSamples, "need at least 10 samples in the fit window");
  const double dm = static_cast<double>(m);
  f.rate = (dm * sty - st * sy) / (dm * stt - st * st);
  f.samples = m;
  f.bound_satisfied = ok;
  return f;
}

DecayFit fit_decay(const std::vector<Diagnostics>& diag, double E_inf, DecayQuantity quantity, FitWindow window,
                   double bound_rate, std::optional<double> prefactor, double tol) {
  if (diag.empty()) throw Error(Errc::InsufficientSamples, "empty trajectory");
  std::vector<double> t, q;
  for (const auto& d : diag) {
    t.push_back(d.t);
    switch (quantity) {
      case DecayQuantity::energy_gap: q.push_back(d.E - E_inf); break;
      case DecayQuantity::w2: q.push_back(d.W2); break;
      case DecayQuantity::l2: q.push_back(d.L2); break;
      case DecayQuantity::l1: q.push_back(d.L1); break;
      case DecayQuantity::dissipation: q.push_back(d.I); break;
    }
  }
  const double pref = prefactor ? *prefactor : q.front();
  DecayFit f = fit_decay(t, q, window, bound_rate, pref, tol);
  f.quantity = quantity;
  return f;
}

namespace {

// Piecewise-linear interpolation through cell centers, zero one cell beyond the ends.
double interp(const GridDensity& rho, double x) {
  const Grid& g = rho.grid;
  const double u = (x - g.x_min) / g.h() - 0.5;  // fractional cell index
  if (u <= -1.0 || u >= static_cast<double>(g.n)) return 0.0;
  const double fl = std::floor(u);
  const Index i = static_cast<Index>(fl);
  const double w = u - fl;
  const double l = i >= 0 ? rho.values[i] : 0.0;
  const double r = i + 1 < g.n ? rho.values[i + 1] : 0.0;
  return (1.0 - w) * l + w * r;
}

}  // namespace

Rescaled change_of_variables(const GridDensity& in, double time, Direction dir, double s) {
  if (!(s > 0.0 && s < 1.0)) throw Error(Errc::OutOfRange, "s must lie in (0,1)");
  if (!(time >= 0.0)) throw Error(Errc::OutOfRange, "time must be nonnegative");
  const double alpha = 1.0 / (3.0 - 2.0 * s);
  const double beta = alpha;
  Rescaled out;
  if (time == 0.0) {
    out.rho = in;
    out.time = 0.0;
    return out;
  }
  const Grid& g = in.grid;
  Vec v(g.n);
  if (dir == Direction::physical_to_self_similar) {
    const double tau = time, f = 1.0 + tau;
    for (Index i = 0; i < g.n; ++i) v[i] = std::pow(f, alpha) * interp(in, g.x(i) * std::pow(f, beta));
    out.time = std::log1p(tau);
  } else {
    const double tau = std::expm1(time), f = 1.0 + tau;
    for (Index i = 0; i < g.n; ++i) v[i] = std::pow(f, -alpha) * interp(in, g.x(i) * std::pow(f, -beta));
    out.time = tau;
  }
  out.rho = GridDensity(g, v);
  return out;
}

EpsSteadyState steady_state_eps(const SolverConfig& cfg, const GridDensity& init, double t_max, double tol) {
  if (!(cfg.eps > 0.0)) throw Error(Errc::OutOfRange, "steady_state_eps needs eps > 0; use the steady module at eps = 0");
  const FvSolver solver(cfg);
  Vec rho = init.values;
  EpsSteadyState st;
  double t = 0.0;
  std::size_t k = 0;
  Vec p = solver.model().riesz().potential(rho);
  double I = solver.face_dissipation(rho);
  while (!(I < tol)) {
    if (t > t_max) throw Error(Errc::NotConverged, "eps steady state not reached by t_max");
    const double dt = cfg.cfl * solver.stable_dt(rho, p);
    StepInfo info;
    Vec p_next;
    rho = solver.step(rho, p, dt, &info, &p_next);
    p = std::move(p_next);
    t += dt;
    ++k;
    I = info.face_dissipation;
  }
  st.rho = GridDensity(cfg.grid, rho);
  st.t = t;
  st.dissipation = solver.face_dissipation(rho);
  st.steps = k;
  return st;
}

}  // namespace fpme
