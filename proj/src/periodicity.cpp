#include <algorithm>
#include <cmath>
#include <numeric>

#include "obsvlab/kernels.hpp"
#include "obsvlab/obsv.hpp"
#include "obsvlab/program.hpp"
#include "obsvlab/random.hpp"

namespace obsvlab {

std::string_view to_string(Periodicity p) {
  switch (p) {
    case Periodicity::Periodic: return "periodic";
    case Periodicity::Aperiodic: return "aperiodic";
    case Periodicity::Undetermined: return "undetermined";
  }
  return "undetermined";
}

namespace {

constexpr double kPeakThreshold = 0.3;
constexpr int kRefineIterations = 40;
constexpr int kRefinePoints = 1024;

void check_options(const Expr& gamma, const PeriodOptions& o) {
  if (o.grid < 64) throw std::invalid_argument("period grid must have at least 64 samples");
  if (!(o.window.lo < o.window.hi)) throw std::invalid_argument("empty analysis window");
  for (const auto& v : free_variables(gamma))
    if (v != "x") throw std::invalid_argument("sensor function may only use 'x', found '" + v + "'");
}

std::vector<double> grid_points(const PeriodOptions& o) {
  std::vector<double> xs(o.grid);
  const double dx = (o.window.hi - o.window.lo) / (o.grid - 1);
  for (int i = 0; i < o.grid; ++i) xs[i] = o.window.lo + i * dx;
  return xs;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

bool values_differ_relative(double a, double b, double tol) {
  const double scale = std::max({std::fabs(a), std::fabs(b), 1e-300});
  return std::fabs(a - b) > tol * scale;
}

struct Sampled {
  std::vector<double> xs;
  std::vector<double> values;
  double scale = 0.0;
};

Sampled sample(const Program& program, const PeriodOptions& o) {
  Sampled s;
  s.xs = grid_points(o);
  s.values.resize(s.xs.size());
  for (std::size_t i = 0; i < s.xs.size(); ++i) s.values[i] = program.run1(s.xs[i]);
  s.scale = max_abs(s.values);
  return s;
}

struct Peak {
  double period;
  double height;
};

std::vector<Peak> autocorrelation_peaks(const std::vector<double>& samples, double dx) {
  const std::size_t n = samples.size();
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  std::vector<double> centered(n);
  for (std::size_t i = 0; i < n; ++i) centered[i] = samples[i] - mean;
  std::vector<double> ac(n / 2 + 1);
  kernels::autocorrelation(centered, ac);
  std::vector<Peak> peaks;
  if (!(ac[0] > 0.0)) return peaks;
  for (auto& a : ac) a /= ac[0];
  std::size_t first = 1;
  while (first < ac.size() && ac[first] > kPeakThreshold) ++first;
  for (std::size_t lag = std::max<std::size_t>(first, 2); lag + 1 < ac.size(); ++lag) {
    if (ac[lag] > ac[lag - 1] && ac[lag] >= ac[lag + 1] && ac[lag] > kPeakThreshold) {
      const double denom = ac[lag - 1] - 2.0 * ac[lag] + ac[lag + 1];
      const double offset = denom != 0.0 ? 0.5 * (ac[lag - 1] - ac[lag + 1]) / denom : 0.0;
      peaks.push_back({(lag + std::clamp(offset, -0.5, 0.5)) * dx, ac[lag]});
    }
  }
  return peaks;
}

// Gauss-Newton on sum_i (gamma(x_i + T) - gamma(x_i))^2, kept inside
// T0 * [0.75, 1.25] so neither T -> 0 nor a multiple of T0 is reached.
double refine_period(const DerivativeChain& chain, const Sampled& s, double T0, double dx) {
  const double half_width = std::max(0.25 * T0, 2.0 * dx);
  const double lo = std::max(T0 - half_width, dx);
  const double hi = T0 + half_width;
  std::vector<std::size_t> idx;
  const double limit = s.xs.back() - hi;
  for (std::size_t i = 0; i < s.xs.size() && s.xs[i] <= limit; ++i) idx.push_back(i);
  if (idx.size() < 8) return T0;
  const std::size_t stride = std::max<std::size_t>(1, idx.size() / kRefinePoints);

  double T = T0;
  try {
    for (int it = 0; it < kRefineIterations; ++it) {
      double num = 0.0;
      double den = 0.0;
      for (std::size_t j = 0; j < idx.size(); j += stride) {
        const std::size_t i = idx[j];
        const double r = chain.at(0, s.xs[i] + T) - s.values[i];
        const double g = chain.at(1, s.xs[i] + T);
        num += r * g;
        den += g * g;
      }
      if (den == 0.0) break;
      const double next = std::clamp(T - num / den, lo, hi);
      const double step = next - T;
      T = next;
      if (std::fabs(step) <= 1e-15 * std::max(1.0, std::fabs(T))) break;
    }
  } catch (const DomainError&) {
    return T0;
  }
  return T;
}

}  // namespace

CandidateCheck check_period(const Expr& gamma, double period, const PeriodOptions& o) {
  check_options(gamma, o);
  CandidateCheck c;
  c.period = period;
  DerivativeChain chain(gamma, "x", std::max(o.k_check, o.max_order));
  const auto xs = grid_points(o);

  double scale = 0.0;
  double worst = -1.0;
  std::size_t worst_i = 0;
  std::vector<double> base(xs.size());
  std::vector<double> shifted(xs.size());
  try {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      base[i] = chain.at(0, xs[i]);
      shifted[i] = chain.at(0, xs[i] + period);
    }
  } catch (const DomainError&) {
    c.residual = std::numeric_limits<double>::infinity();
    return c;
  }
  scale = std::max(max_abs(base), 1e-300);
  const double resid = kernels::max_abs_diff(base, shifted);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = std::fabs(base[i] - shifted[i]);
    if (d > worst) {
      worst = d;
      worst_i = i;
    }
  }
  c.residual = resid / scale;
  if (!(c.residual <= o.per_tol)) {
    c.mismatch = Mismatch{xs[worst_i], xs[worst_i] + period, 0, base[worst_i], shifted[worst_i]};
    return c;
  }

  Rng rng(o.seed ^ 0x9e3779b97f4a7c15ULL);
  for (int p = 0; p < o.probes; ++p) {
    const double r = rng.uniform(o.window.lo, o.window.hi);
    for (int k = 0; k <= o.k_check; ++k) {
      double a = 0.0;
      double b = 0.0;
      try {
        a = chain.at(k, r);
        b = chain.at(k, r + period);
      } catch (const DomainError&) {
        break;
      }
      const double tol = o.per_tol * std::max({scale, std::fabs(a), std::fabs(b)});
      if (std::fabs(a - b) > tol) {
        c.mismatch = Mismatch{r, r + period, k, a, b};
        return c;
      }
    }
  }
  c.accepted = true;
  return c;
}

PeriodicityVerdict detect_period(const Expr& gamma, const PeriodOptions& o) {
  check_options(gamma, o);
  PeriodicityVerdict v;
  DerivativeChain chain(gamma, "x", std::max(o.k_check, o.max_order));
  const Program value_program(gamma, {"x"});
  const Sampled s = sample(value_program, o);
  const double dx = (o.window.hi - o.window.lo) / (o.grid - 1);
  const double floor_scale = std::max(1.0, s.scale);

  // Constant functions admit every period.
  bool constant = simplify(chain.derivative(1)).is_constant(0.0);
  if (!constant) {
    const auto [mn, mx] = std::minmax_element(s.values.begin(), s.values.end());
    if (*mx - *mn <= o.per_tol * floor_scale) {
      constant = true;
      Rng rng(o.seed);
      for (int p = 0; p < o.probes && constant; ++p) {
        const double r = rng.uniform(o.window.lo, o.window.hi);
        for (int k = 1; k <= o.k_check && constant; ++k)
          if (std::fabs(chain.at(k, r)) > o.per_tol * floor_scale) constant = false;
      }
    }
  }
  if (constant) {
    v.classification = Periodicity::Periodic;
    v.constant = true;
    v.reason = "constant function: every shift is a period";
    return v;
  }

  std::vector<Peak> peaks = autocorrelation_peaks(s.values, dx);
  try {
    std::vector<double> slope(s.xs.size());
    for (std::size_t i = 0; i < s.xs.size(); ++i) slope[i] = chain.at(1, s.xs[i]);
    const auto more = autocorrelation_peaks(slope, dx);
    peaks.insert(peaks.end(), more.begin(), more.end());
  } catch (const DomainError&) {
  }
  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const Peak& a, const Peak& b) { return a.height > b.height; });
  std::vector<double> starts;
  for (const auto& p : peaks) {
    if (static_cast<int>(starts.size()) >= o.max_candidates) break;
    const bool dup = std::any_of(starts.begin(), starts.end(),
                                 [&](double t) { return std::fabs(t - p.period) < 2.0 * dx; });
    if (!dup) starts.push_back(p.period);
  }

  std::vector<double> refined;
  for (double T0 : starts) {
    const double T = refine_period(chain, s, T0, dx);
    const bool dup = std::any_of(refined.begin(), refined.end(), [&](double r) {
      return std::fabs(r - T) <= 1e-9 * std::max(1.0, std::fabs(T));
    });
    if (dup) continue;
    refined.push_back(T);
    v.candidates.push_back(check_period(gamma, T, o));
  }
  std::sort(v.candidates.begin(), v.candidates.end(),
            [](const CandidateCheck& a, const CandidateCheck& b) { return a.period < b.period; });

  for (const auto& c : v.candidates) {
    if (c.accepted) {
      v.classification = Periodicity::Periodic;
      v.period = c.period;
      v.reason = "validated period";
      return v;
    }
  }

  double best = std::numeric_limits<double>::infinity();
  double best_T = 0.0;
  for (const auto& c : v.candidates) {
    if (c.residual < best) {
      best = c.residual;
      best_T = c.period;
    }
  }
  if (best <= o.near_tol) {
    v.classification = Periodicity::Undetermined;
    v.reason = "near-period " + std::to_string(best_T) + " with relative residual " +
               std::to_string(best) + " between tolerances";
    return v;
  }

  // Derivative-mismatch probe: an aperiodic analytic function has, for each
  // pair r != s, some order k with gamma^(k)(r) != gamma^(k)(s).
  Rng rng(o.seed);
  for (int p = 0; p < o.probes; ++p) {
    std::optional<Mismatch> found;
    for (int attempt = 0; attempt < 8 && !found; ++attempt) {
      const double r = rng.uniform(o.window.lo, o.window.hi);
      const double q = rng.uniform(o.window.lo, o.window.hi);
      if (r == q) continue;
      bool domain_failure = false;
      for (int k = 0; k <= o.max_order; ++k) {
        double a = 0.0;
        double b = 0.0;
        try {
          a = chain.at(k, r);
          b = chain.at(k, q);
        } catch (const DomainError&) {
          domain_failure = true;
          break;
        }
        if (values_differ_relative(a, b, o.per_tol)) {
          found = Mismatch{r, q, k, a, b};
          break;
        }
      }
      if (!domain_failure && !found) break;
    }
    if (!found) {
      v.classification = Periodicity::Undetermined;
      v.reason = "derivative probe found no mismatch up to order " + std::to_string(o.max_order);
      return v;
    }
    v.probe_evidence.push_back(*found);
  }
  v.classification = Periodicity::Aperiodic;
  v.reason = v.candidates.empty() ? "no candidate period in window"
                                  : "all candidate periods falsified";
  return v;
}

SystemPeriodicity is_aperiodic_system(const CascadeSystem& sys, const PeriodOptions& o) {
  if (auto viol = validate(sys); !viol.empty()) throw ValidationError(std::move(viol));
  SystemPeriodicity out;
  bool any_periodic = false;
  bool any_undetermined = false;
  for (const auto& g : sys.gamma) {
    out.per_sensor.push_back(detect_period(g, o));
    any_periodic |= out.per_sensor.back().classification == Periodicity::Periodic;
    any_undetermined |= out.per_sensor.back().classification == Periodicity::Undetermined;
  }
  out.overall = any_periodic       ? Periodicity::Periodic
                : any_undetermined ? Periodicity::Undetermined
                                   : Periodicity::Aperiodic;
  return out;
}

}  // namespace obsvlab
