#pragma once

// Observability analysis of cascade systems with high-pass outputs.
//
// For the cascade class the observables (L_f L_g)^k h_i and L_g (L_f L_g)^k h_i
// have closed forms in the derivatives of gamma_i, which makes global
// observability equivalent to every gamma_i being aperiodic. Deciding
// aperiodicity from samples is not possible in general, so the period
// detector reports `undetermined` rather than guessing.

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "obsvlab/expr.hpp"
#include "obsvlab/lie.hpp"
#include "obsvlab/model.hpp"

namespace obsvlab {

// gamma_i^(k)(x_i) * b_i^k * z_i. `i` is 0-based; state is (x.., z..).
double cascade_lflg(const CascadeSystem& sys, int i, int k, std::span<const double> state,
                    int max_order = kDefaultMaxDerivativeOrder);
// gamma_i^(k)(x_i) * b_i^(k+1); independent of z.
double cascade_lglflg(const CascadeSystem& sys, int i, int k, std::span<const double> state,
                      int max_order = kDefaultMaxDerivativeOrder);

// ---------------------------------------------------------------------------
// Periodicity

struct Interval {
  double lo = -20.0;
  double hi = 20.0;
};

struct PeriodOptions {
  Interval window{};
  int grid = 4096;
  double per_tol = 1e-8;      // relative residual accepted as periodic
  double near_tol = 1e-4;     // residuals in (per_tol, near_tol] are inconclusive
  int k_check = 6;            // derivative orders compared for a candidate
  int max_order = kDefaultMaxDerivativeOrder;
  int probes = 10;            // random (r, s) pairs for the derivative-mismatch probe
  int max_candidates = 8;
  std::uint64_t seed = 0;
};

enum class Periodicity { Periodic, Aperiodic, Undetermined };
std::string_view to_string(Periodicity p);

// gamma^(k)(r) != gamma^(k)(s), with both values.
struct Mismatch {
  double r = 0.0;
  double s = 0.0;
  int k = 0;
  double value_r = 0.0;
  double value_s = 0.0;
};

struct CandidateCheck {
  double period = 0.0;
  double residual = 0.0;      // max |gamma(x+T) - gamma(x)| / scale over the grid
  bool accepted = false;
  std::optional<Mismatch> mismatch;
};

struct PeriodicityVerdict {
  Periodicity classification = Periodicity::Undetermined;
  std::optional<double> period;  // smallest accepted positive period
  bool constant = false;
  std::vector<CandidateCheck> candidates;
  std::vector<Mismatch> probe_evidence;
  std::string reason;
};

PeriodicityVerdict detect_period(const Expr& gamma, const PeriodOptions& options = {});

// Check a specific shift T as a period of gamma: grid residual plus derivative
// matching at random points.
CandidateCheck check_period(const Expr& gamma, double period, const PeriodOptions& options = {});

struct SystemPeriodicity {
  std::vector<PeriodicityVerdict> per_sensor;
  Periodicity overall = Periodicity::Undetermined;  // Aperiodic <=> observable
};

SystemPeriodicity is_aperiodic_system(const CascadeSystem& sys, const PeriodOptions& options = {});

// ---------------------------------------------------------------------------
// Separation

struct SeparationOptions {
  int max_order = kDefaultMaxDerivativeOrder;
  double sep_tol = 1e-9;
  PeriodOptions period{};
};

enum class SeparationVerdict { Separated, IndistinguishableByConstruction, NotSeparatedWithinBounds };
std::string_view to_string(SeparationVerdict v);

struct SeparationCertificate {
  SeparationVerdict verdict = SeparationVerdict::NotSeparatedWithinBounds;
  std::optional<ObservableWord> witness;
  int order = -1;        // k of the witness family
  std::string family;    // "lflg" or "lglflg"
  double value0 = 0.0;
  double value1 = 0.0;
  std::optional<std::vector<double>> shift;  // for the periodic construction
  int max_order = 0;
  double sep_tol = 0.0;
};

// Relative gap test used by certificates: |a-b| > tol * (1 + max(|a|,|b|)).
bool separated_values(double a, double b, double tol);

// Throws std::invalid_argument if s0 == s1 or dimensions mismatch.
SeparationCertificate find_separating_observable(const CascadeSystem& sys,
                                                 std::span<const double> s0,
                                                 std::span<const double> s1,
                                                 const SeparationOptions& options = {});

// ---------------------------------------------------------------------------
// Local rank

struct RankOptions {
  int max_words = 0;  // 0 = 2 * dim(X)
  int max_length = kDefaultMaxWordLength;
  double rank_tol = 1e-10;
  // Drift-only words span the observation space of the unforced system. Set
  // to also enumerate words containing input fields.
  bool include_input_words = false;
};

struct RankReport {
  std::vector<ObservableWord> words;
  Eigen::MatrixXd gradients;  // one row per word
  Eigen::VectorXd singular_values;
  int rank = 0;
  int dim = 0;
  bool full_rank() const { return rank == dim; }
};

RankReport local_rank(const ControlAffineSystem& sys, std::span<const double> x0,
                      const RankOptions& options = {});

// z^2 (2 gamma'(x)^2 - gamma(x) gamma''(x)) for a single-sensor system.
double simple_rank_condition(const Expr& gamma, double x, double z);

}  // namespace obsvlab
