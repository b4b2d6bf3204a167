#include "obsvlab/sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "obsvlab/program.hpp"

namespace obsvlab {

namespace {

std::string fmt(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double parse_double(std::string_view s, const std::string& context) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw std::invalid_argument("bad number '" + std::string(s) + "' in " + context);
  return v;
}

}  // namespace

InputSignal::InputSignal(Kind kind) : kind_(std::move(kind)) {
  if (const auto* p = std::get_if<PiecewiseConstantInput>(&kind_)) {
    if (p->values.size() != p->breakpoints.size() + 1)
      throw std::invalid_argument("piecewise input needs one more value than breakpoints");
    for (std::size_t i = 1; i < p->breakpoints.size(); ++i)
      if (!(p->breakpoints[i] > p->breakpoints[i - 1]))
        throw std::invalid_argument("piecewise breakpoints must be strictly increasing");
  }
  if (const auto* t = std::get_if<TableInput>(&kind_)) {
    if (t->samples.empty() || !(t->dt > 0.0))
      throw std::invalid_argument("table input needs samples and a positive spacing");
  }
}

InputSignal InputSignal::parse(const std::string& text) {
  if (text == "zero") return zero();
  if (text.rfind("const:", 0) == 0) return constant(parse_double(text.substr(6), "const input"));
  if (text.rfind("sin:", 0) == 0) {
    std::vector<double> parts;
    std::stringstream ss(text.substr(4));
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(parse_double(item, "sin input"));
    if (parts.size() != 3)
      throw std::invalid_argument("sin input expects sin:<amplitude>,<omega>,<phase>");
    return sinusoid(parts[0], parts[1], parts[2]);
  }
  throw std::invalid_argument("unknown input '" + text + "' (zero | const:<c> | sin:<a>,<w>,<phi>)");
}

double InputSignal::operator()(double t) const {
  struct Visitor {
    double t;
    double operator()(const ZeroInput&) const { return 0.0; }
    double operator()(const ConstantInput& c) const { return c.value; }
    double operator()(const SinusoidInput& s) const {
      return s.amplitude * std::sin(s.omega * t + s.phase);
    }
    double operator()(const PiecewiseConstantInput& p) const {
      const auto it = std::upper_bound(p.breakpoints.begin(), p.breakpoints.end(), t);
      return p.values[static_cast<std::size_t>(it - p.breakpoints.begin())];
    }
    double operator()(const TableInput& tab) const {
      const double pos = (t - tab.t0) / tab.dt;
      if (pos <= 0.0) return tab.samples.front();
      const auto last = static_cast<double>(tab.samples.size() - 1);
      if (pos >= last) return tab.samples.back();
      const auto i = static_cast<std::size_t>(pos);
      const double frac = pos - static_cast<double>(i);
      return tab.samples[i] + frac * (tab.samples[i + 1] - tab.samples[i]);
    }
  };
  return std::visit(Visitor{t}, kind_);
}

std::string InputSignal::describe() const {
  struct Visitor {
    std::string operator()(const ZeroInput&) const { return "zero"; }
    std::string operator()(const ConstantInput& c) const { return "const:" + fmt(c.value); }
    std::string operator()(const SinusoidInput& s) const {
      return "sin:" + fmt(s.amplitude) + "," + fmt(s.omega) + "," + fmt(s.phase);
    }
    std::string operator()(const PiecewiseConstantInput& p) const {
      return "piecewise:" + std::to_string(p.values.size()) + " pieces";
    }
    std::string operator()(const TableInput& t) const {
      return "table:" + std::to_string(t.samples.size()) + " samples";
    }
  };
  return std::visit(Visitor{}, kind_);
}

// ---------------------------------------------------------------------------

Trajectory integrate(const ControlAffineSystem& sys, std::span<const double> x0,
                     const InputSignal& u, double t_end, double dt) {
  check_consistent(sys);
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
  if (!(t_end >= dt) || !std::isfinite(t_end)) throw std::invalid_argument("t_end must be at least dt");
  if (sys.num_inputs() > 1) throw std::invalid_argument("only single-input systems can be simulated");
  const std::size_t d = sys.dim();
  if (x0.size() != d) throw std::invalid_argument("state dimension mismatch");

  std::vector<Expr> rhs = sys.drift;
  const bool forced = sys.num_inputs() == 1;
  if (forced) rhs.insert(rhs.end(), sys.inputs[0].begin(), sys.inputs[0].end());
  const Program field(rhs, sys.state);
  const Program output(sys.outputs, sys.state);

  std::vector<double> buf(rhs.size());
  auto f = [&](const std::vector<double>& s, double t, std::vector<double>& out) {
    field.run(s, buf);
    const double ut = forced ? u(t) : 0.0;
    for (std::size_t i = 0; i < d; ++i) out[i] = buf[i] + (forced ? ut * buf[d + i] : 0.0);
  };

  const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
  Trajectory traj;
  traj.t0 = 0.0;
  traj.dt = dt;
  traj.states.reserve(steps + 1);
  traj.outputs.reserve(steps + 1);

  std::vector<double> s(x0.begin(), x0.end());
  std::vector<double> k1(d), k2(d), k3(d), k4(d), tmp(d);
  std::vector<double> y(sys.num_outputs());
  auto record = [&](double t) {
    for (double v : s)
      if (!std::isfinite(v)) throw IntegrationError("non-finite state at t = " + fmt(t), t);
    output.run(s, y);
    traj.states.push_back(s);
    traj.outputs.push_back(y);
  };

  record(0.0);
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    f(s, t, k1);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = s[i] + 0.5 * dt * k1[i];
    f(tmp, t + 0.5 * dt, k2);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = s[i] + 0.5 * dt * k2[i];
    f(tmp, t + 0.5 * dt, k3);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = s[i] + dt * k3[i];
    f(tmp, t + dt, k4);
    for (std::size_t i = 0; i < d; ++i)
      s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    record(static_cast<double>(k + 1) * dt);
  }
  return traj;
}

std::string trajectory_csv(const Trajectory& traj, const std::vector<std::string>& state_names,
                           std::size_t num_outputs) {
  std::string out = "t";
  for (const auto& n : state_names) out += "," + n;
  for (std::size_t j = 1; j <= num_outputs; ++j) out += ",y" + std::to_string(j);
  out += "\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out += fmt(traj.time(k));
    for (double v : traj.states[k]) out += "," + fmt(v);
    for (double v : traj.outputs[k]) out += "," + fmt(v);
    out += "\n";
  }
  return out;
}

double max_output_gap(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size()) throw std::invalid_argument("trajectories have different lengths");
  double gap = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t j = 0; j < a.outputs[k].size(); ++j)
      gap = std::max(gap, std::fabs(a.outputs[k][j] - b.outputs[k][j]));
  return gap;
}

ShiftExperiment indistinguishability_experiment(const CascadeSystem& sys,
                                                const std::vector<double>& shift,
                                                const std::vector<InputSignal>& inputs,
                                                double t_end, double dt) {
  const auto affine = as_control_affine(sys);
  if (shift.size() != static_cast<std::size_t>(sys.n))
    throw std::invalid_argument("shift must have n entries");
  if (std::count_if(shift.begin(), shift.end(), [](double v) { return v != 0.0; }) != 1)
    throw std::invalid_argument("shift must have exactly one nonzero coordinate");

  std::vector<double> s0(2 * sys.n, 0.0);
  std::vector<double> s1 = s0;
  std::copy(shift.begin(), shift.end(), s1.begin());

  ShiftExperiment out;
  out.shift = shift;
  for (const auto& u : inputs) {
    const auto a = integrate(affine, s0, u, t_end, dt);
    const auto b = integrate(affine, s1, u, t_end, dt);
    out.inputs.push_back(u.describe());
    out.gaps.push_back(max_output_gap(a, b));
  }
  return out;
}

std::string_view to_string(GapClass g) {
  switch (g) {
    case GapClass::Identical: return "identical";
    case GapClass::Inconclusive: return "inconclusive";
    case GapClass::Diverged: return "diverged";
  }
  return "inconclusive";
}

GapClass classify_gap(double gap, double dist_tol) {
  if (gap <= dist_tol) return GapClass::Identical;
  if (gap <= kInconclusiveTol) return GapClass::Inconclusive;
  return GapClass::Diverged;
}

DistinguishResult distinguishability_experiment(const CascadeSystem& sys,
                                                std::span<const double> s0,
                                                std::span<const double> s1,
                                                const InputSignal& u, double t_end, double dt,
                                                double dist_tol) {
  const auto affine = as_control_affine(sys);
  const auto a = integrate(affine, s0, u, t_end, dt);
  const auto b = integrate(affine, s1, u, t_end, dt);
  DistinguishResult r;
  for (std::size_t k = 0; k < a.size(); ++k) {
    double g = 0.0;
    for (std::size_t j = 0; j < a.outputs[k].size(); ++j)
      g = std::max(g, std::fabs(a.outputs[k][j] - b.outputs[k][j]));
    if (g > dist_tol && !r.first_divergence) r.first_divergence = a.time(k);
    r.gap = std::max(r.gap, g);
  }
  r.classification = classify_gap(r.gap, dist_tol);
  return r;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> law_variables(int q_dim, int num_outputs) {
  std::vector<std::string> vars;
  for (int i = 1; i <= q_dim; ++i) vars.push_back("q" + std::to_string(i));
  for (int j = 1; j <= num_outputs; ++j) vars.push_back("y" + std::to_string(j));
  return vars;
}

}  // namespace

FeedbackLaw FeedbackLaw::parse(int num_outputs, const std::vector<std::string>& dynamics,
                               const std::string& output) {
  FeedbackLaw law;
  law.q_dim = static_cast<int>(dynamics.size());
  const auto vars = law_variables(law.q_dim, num_outputs);
  const std::set<std::string> allowed(vars.begin(), vars.end());
  for (const auto& d : dynamics) law.dynamics.push_back(obsvlab::parse(d, allowed));
  law.output = obsvlab::parse(output, allowed);
  return law;
}

std::vector<double> closed_loop_field(const CascadeSystem& sys, const FeedbackLaw& law,
                                      std::span<const double> x, std::span<const double> z,
                                      std::span<const double> q) {
  const auto affine = as_control_affine(sys);
  const auto n = static_cast<std::size_t>(sys.n);
  if (x.size() != n || z.size() != n || q.size() != static_cast<std::size_t>(law.q_dim))
    throw std::invalid_argument("closed-loop state dimension mismatch");
  if (law.dynamics.size() != q.size()) throw std::invalid_argument("feedback law dimension mismatch");

  std::vector<double> state(x.begin(), x.end());
  state.insert(state.end(), z.begin(), z.end());
  std::vector<double> y(n);
  Program(affine.outputs, affine.state).run(state, y);

  const auto vars = law_variables(law.q_dim, sys.n);
  std::vector<double> law_in(q.begin(), q.end());
  law_in.insert(law_in.end(), y.begin(), y.end());
  std::vector<Expr> law_exprs = law.dynamics;
  law_exprs.push_back(law.output);
  std::vector<double> law_out(law_exprs.size());
  Program(law_exprs, vars).run(law_in, law_out);
  const double u = law_out.back();

  std::vector<double> F(n);
  Program(sys.drift, z_names(sys.n)).run(z, F);

  std::vector<double> field;
  field.insert(field.end(), z.begin(), z.end());
  for (std::size_t i = 0; i < n; ++i) field.push_back(F[i] + sys.b[i] * u);
  field.insert(field.end(), law_out.begin(), law_out.end() - 1);
  return field;
}

std::vector<EquilibriumResidual> output_feedback_equilibria_check(
    const CascadeSystem& sys, const FeedbackLaw& law, const std::vector<double>& q_star,
    const std::vector<double>& xi_grid) {
  const auto n = static_cast<std::size_t>(sys.n);
  const std::vector<double> zeros(n, 0.0);
  auto norm = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double c : v) s += c * c;
    return std::sqrt(s);
  };

  const double premise = norm(closed_loop_field(sys, law, zeros, zeros, q_star));
  if (!(premise <= 1e-12))
    throw PremiseError("(0, 0, q*) is not an equilibrium of the closed loop (residual " +
                       fmt(premise) + ")");

  std::vector<EquilibriumResidual> table;
  for (double xi : xi_grid) {
    const std::vector<double> x(n, xi);
    table.push_back({xi, norm(closed_loop_field(sys, law, x, zeros, q_star))});
  }
  return table;
}

}  // namespace obsvlab
