#include "obsvlab/obsv.hpp"

#include <algorithm>
#include <cmath>

#include "obsvlab/program.hpp"

namespace obsvlab {

namespace {

void check_cascade_index(const CascadeSystem& sys, int i, std::span<const double> state) {
  if (i < 0 || i >= sys.n) throw std::out_of_range("sensor index out of range");
  if (state.size() != static_cast<std::size_t>(2 * sys.n))
    throw std::invalid_argument("state must have 2n entries");
}

}  // namespace

double cascade_lflg(const CascadeSystem& sys, int i, int k, std::span<const double> state,
                    int max_order) {
  check_cascade_index(sys, i, state);
  const double x = state[i];
  const double z = state[sys.n + i];
  return nth_derivative_at(sys.gamma[i], "x", k, x, max_order) * std::pow(sys.b[i], k) * z;
}

double cascade_lglflg(const CascadeSystem& sys, int i, int k, std::span<const double> state,
                      int max_order) {
  check_cascade_index(sys, i, state);
  const double x = state[i];
  return nth_derivative_at(sys.gamma[i], "x", k, x, max_order) * std::pow(sys.b[i], k + 1);
}

// ---------------------------------------------------------------------------

std::string_view to_string(SeparationVerdict v) {
  switch (v) {
    case SeparationVerdict::Separated: return "separated";
    case SeparationVerdict::IndistinguishableByConstruction: return "indistinguishable-by-construction";
    case SeparationVerdict::NotSeparatedWithinBounds: return "not-separated-within-bounds";
  }
  return "not-separated-within-bounds";
}

bool separated_values(double a, double b, double tol) {
  return std::fabs(a - b) > tol * (1.0 + std::max(std::fabs(a), std::fabs(b)));
}

SeparationCertificate find_separating_observable(const CascadeSystem& sys,
                                                 std::span<const double> s0,
                                                 std::span<const double> s1,
                                                 const SeparationOptions& o) {
  if (auto viol = validate(sys); !viol.empty()) throw ValidationError(std::move(viol));
  const auto n = static_cast<std::size_t>(sys.n);
  if (s0.size() != 2 * n || s1.size() != 2 * n)
    throw std::invalid_argument("states must have 2n entries");
  if (std::equal(s0.begin(), s0.end(), s1.begin()))
    throw std::invalid_argument("states are equal");

  SeparationCertificate cert;
  cert.max_order = o.max_order;
  cert.sep_tol = o.sep_tol;

  std::vector<DerivativeChain> chains;
  for (const auto& g : sys.gamma) chains.emplace_back(g, "x", o.max_order);

  auto found = [&](int i, int k, bool with_input, double a, double b) {
    cert.verdict = SeparationVerdict::Separated;
    cert.witness = with_input ? lglflg_word(i, k) : lflg_word(i, k);
    cert.family = with_input ? "lglflg" : "lflg";
    cert.order = k;
    cert.value0 = a;
    cert.value1 = b;
    return cert;
  };

  // Differing positions: L_g (L_f L_g)^k h_i = gamma_i^(k)(x_i) b_i^(k+1).
  for (std::size_t i = 0; i < n; ++i) {
    if (s0[i] == s1[i]) continue;
    double bk = sys.b[i];
    for (int k = 0; k <= o.max_order; ++k, bk *= sys.b[i]) {
      double a = 0.0;
      double b = 0.0;
      try {
        a = chains[i].at(k, s0[i]) * bk;
        b = chains[i].at(k, s1[i]) * bk;
      } catch (const DomainError&) {
        break;
      }
      if (separated_values(a, b, o.sep_tol)) return found(static_cast<int>(i), k, true, a, b);
    }
  }

  // Differing velocities: (L_f L_g)^k h_i = gamma_i^(k)(x_i) b_i^k z_i.
  for (std::size_t i = 0; i < n; ++i) {
    if (s0[n + i] == s1[n + i] && s0[i] == s1[i]) continue;
    double bk = 1.0;
    for (int k = 0; k <= o.max_order; ++k, bk *= sys.b[i]) {
      double a = 0.0;
      double b = 0.0;
      try {
        a = chains[i].at(k, s0[i]) * bk * s0[n + i];
        b = chains[i].at(k, s1[i]) * bk * s1[n + i];
      } catch (const DomainError&) {
        break;
      }
      if (separated_values(a, b, o.sep_tol)) return found(static_cast<int>(i), k, false, a, b);
    }
  }

  // Shift of one position coordinate by a period of its sensor, equal velocities.
  const bool same_z = std::equal(s0.begin() + n, s0.end(), s1.begin() + n);
  std::vector<std::size_t> moved;
  for (std::size_t i = 0; i < n; ++i)
    if (s0[i] != s1[i]) moved.push_back(i);
  if (same_z && moved.size() == 1) {
    const std::size_t i0 = moved.front();
    const double T = s1[i0] - s0[i0];
    PeriodOptions po = o.period;
    if (check_period(sys.gamma[i0], T, po).accepted) {
      cert.verdict = SeparationVerdict::IndistinguishableByConstruction;
      std::vector<double> shift(n, 0.0);
      shift[i0] = T;
      cert.shift = std::move(shift);
      return cert;
    }
  }

  cert.verdict = SeparationVerdict::NotSeparatedWithinBounds;
  return cert;
}

// ---------------------------------------------------------------------------

RankReport local_rank(const ControlAffineSystem& sys, std::span<const double> x0,
                      const RankOptions& o) {
  check_consistent(sys);
  const std::size_t d = sys.dim();
  if (x0.size() != d) throw std::invalid_argument("state dimension mismatch");
  const std::size_t max_words = o.max_words > 0 ? static_cast<std::size_t>(o.max_words) : 2 * d;

  RankReport report;
  report.dim = static_cast<int>(d);
  ObservableCache cache(sys, o.max_length);
  for (int len = 0; len <= o.max_length && report.words.size() < max_words; ++len) {
    std::vector<std::vector<int>> words;
    if (o.include_input_words)
      words = words_of_length(len, static_cast<int>(sys.num_inputs()));
    else
      words = {std::vector<int>(len, 0)};
    for (const auto& mu : words) {
      for (std::size_t j = 0; j < sys.num_outputs() && report.words.size() < max_words; ++j)
        report.words.push_back(ObservableWord{static_cast<int>(j), mu});
      if (report.words.size() >= max_words) break;
    }
  }

  std::vector<Expr> grads;
  for (const auto& w : report.words) {
    const Expr alpha = cache.observable(w);
    for (const auto& v : sys.state) grads.push_back(diff(alpha, v));
  }
  report.gradients.resize(static_cast<Eigen::Index>(report.words.size()),
                          static_cast<Eigen::Index>(d));
  if (!grads.empty()) {
    Program program(grads, sys.state);
    std::vector<double> values(grads.size());
    program.run(x0, values);
    for (std::size_t r = 0; r < report.words.size(); ++r)
      for (std::size_t c = 0; c < d; ++c) report.gradients(r, c) = values[r * d + c];
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(report.gradients);
  report.singular_values = svd.singularValues();
  const auto& s = report.singular_values;
  if (s.size() > 0 && s(0) > 0.0) {
    for (Eigen::Index i = 0; i < s.size(); ++i)
      if (s(i) > o.rank_tol * s(0)) ++report.rank;
  }
  return report;
}

double simple_rank_condition(const Expr& gamma, double x, double z) {
  DerivativeChain chain(gamma, "x", 2);
  const double g0 = chain.at(0, x);
  const double g1 = chain.at(1, x);
  const double g2 = chain.at(2, x);
  return z * z * (2.0 * g1 * g1 - g0 * g2);
}

}  // namespace obsvlab
