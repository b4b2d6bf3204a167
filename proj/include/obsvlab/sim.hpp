#pragma once

// Fixed-step simulation of control-affine systems and the experiments built
// on it. All trajectories use classical RK4 on the grid t_k = k * dt so that
// paired runs are compared sample by sample.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "obsvlab/model.hpp"

namespace obsvlab {

struct ZeroInput {};
struct ConstantInput {
  double value = 0.0;
};
// amplitude * sin(omega * t + phase)
struct SinusoidInput {
  double amplitude = 1.0;
  double omega = 1.0;
  double phase = 0.0;
};
// values[0] before breakpoints[0], values[i] on [breakpoints[i-1], breakpoints[i]).
struct PiecewiseConstantInput {
  std::vector<double> breakpoints;
  std::vector<double> values;
};
// Samples on t0 + i*dt, linearly interpolated, held constant outside.
struct TableInput {
  double t0 = 0.0;
  double dt = 1.0;
  std::vector<double> samples;
};

class InputSignal {
 public:
  using Kind = std::variant<ZeroInput, ConstantInput, SinusoidInput, PiecewiseConstantInput, TableInput>;

  InputSignal() = default;
  // Throws std::invalid_argument on malformed breakpoints or tables.
  InputSignal(Kind kind);  // NOLINT(google-explicit-constructor)

  static InputSignal zero() { return InputSignal(ZeroInput{}); }
  static InputSignal constant(double c) { return InputSignal(ConstantInput{c}); }
  static InputSignal sinusoid(double amplitude, double omega, double phase = 0.0) {
    return InputSignal(SinusoidInput{amplitude, omega, phase});
  }

  // Parses "zero", "const:<c>" or "sin:<a>,<w>,<phi>".
  static InputSignal parse(const std::string& text);

  double operator()(double t) const;
  const Kind& kind() const { return kind_; }
  std::string describe() const;

 private:
  Kind kind_{ZeroInput{}};
};

struct Trajectory {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<std::vector<double>> states;
  std::vector<std::vector<double>> outputs;

  std::size_t size() const { return states.size(); }
  double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
};

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double t) : std::runtime_error(what), t_(t) {}
  double time() const { return t_; }

 private:
  double t_;
};

inline constexpr double kDefaultDt = 1e-3;
inline constexpr double kDefaultTEnd = 10.0;
inline constexpr double kDistTol = 1e-6;
inline constexpr double kInconclusiveTol = 1e-3;

// Throws std::invalid_argument for dt <= 0 or t_end < dt, IntegrationError on
// non-finite states; DomainError propagates from the vector field.
Trajectory integrate(const ControlAffineSystem& sys, std::span<const double> x0,
                     const InputSignal& u, double t_end = kDefaultTEnd, double dt = kDefaultDt);

// Header "t,x1..xn,z1..zn,y1..yn" for cascade trajectories; generic state
// names otherwise.
std::string trajectory_csv(const Trajectory& traj, const std::vector<std::string>& state_names,
                           std::size_t num_outputs);

// max_k ||y(t_k) - y'(t_k)||_inf
double max_output_gap(const Trajectory& a, const Trajectory& b);

struct ShiftExperiment {
  std::vector<double> shift;
  std::vector<std::string> inputs;
  std::vector<double> gaps;
};

// Runs (0, 0) against (T, 0) under each input. T must have exactly one
// nonzero coordinate.
ShiftExperiment indistinguishability_experiment(const CascadeSystem& sys,
                                                const std::vector<double>& shift,
                                                const std::vector<InputSignal>& inputs,
                                                double t_end = kDefaultTEnd,
                                                double dt = kDefaultDt);

enum class GapClass { Identical, Inconclusive, Diverged };
std::string_view to_string(GapClass g);
GapClass classify_gap(double gap, double dist_tol = kDistTol);

struct DistinguishResult {
  double gap = 0.0;
  std::optional<double> first_divergence;  // first t with gap > dist_tol
  GapClass classification = GapClass::Identical;
};

DistinguishResult distinguishability_experiment(const CascadeSystem& sys,
                                                std::span<const double> s0,
                                                std::span<const double> s1,
                                                const InputSignal& u,
                                                double t_end = kDefaultTEnd,
                                                double dt = kDefaultDt,
                                                double dist_tol = kDistTol);

// ---------------------------------------------------------------------------
// Dynamic output feedback q' = g(q, y), u = k(y, q) over variables q1..qd and
// y1..yn.

struct FeedbackLaw {
  int q_dim = 0;
  std::vector<Expr> dynamics;
  Expr output;

  // Parses each expression over q1..q_dim and y1..y_num_outputs.
  static FeedbackLaw parse(int num_outputs, const std::vector<std::string>& dynamics,
                           const std::string& output);
};

class PremiseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EquilibriumResidual {
  double xi = 0.0;
  double residual = 0.0;
};

// Field of the closed loop (x, z, q) in that order.
std::vector<double> closed_loop_field(const CascadeSystem& sys, const FeedbackLaw& law,
                                      std::span<const double> x, std::span<const double> z,
                                      std::span<const double> q);

// For each xi in `grid`, the closed-loop field norm at (xi * 1, 0, q*).
// Throws PremiseError if (0, 0, q*) is not an equilibrium to 1e-12.
std::vector<EquilibriumResidual> output_feedback_equilibria_check(
    const CascadeSystem& sys, const FeedbackLaw& law, const std::vector<double>& q_star,
    const std::vector<double>& xi_grid);

}  // namespace obsvlab
