#include "obsvlab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "obsvlab/lie.hpp"
#include "obsvlab/obsv.hpp"
#include "obsvlab/sim.hpp"

namespace obsvlab {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string state_text(const std::vector<double>& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + fmt(s[i]);
  return out + ")";
}

double rel_error(double a, double b) {
  const double scale = std::max({std::fabs(a), std::fabs(b), 1e-300});
  return std::fabs(a - b) / scale;
}

class Tally {
 public:
  explicit Tally(std::string name) { r_.name = std::move(name); }

  void check(bool ok, double err, const std::string& context) {
    ++r_.cases;
    if (std::isfinite(err)) r_.max_error = std::max(r_.max_error, err);
    if (!ok) {
      ++r_.failures;
      r_.passed = false;
      if (r_.first_failure.empty()) r_.first_failure = context;
    }
  }

  void compare(double a, double b, const std::string& context, double rel = 1e-8) {
    check(close_values(a, b, rel), rel_error(a, b), context + ": " + fmt(a) + " vs " + fmt(b));
  }

  PropertyResult result() && { return std::move(r_); }

 private:
  PropertyResult r_;
};

void lemma_closed_forms(const CascadeSystem& sys, Rng& rng, int max_order, int states, Tally& t) {
  const ObservableCache cache(as_control_affine(sys), 2 * max_order + 1);
  for (int s = 0; s < states; ++s) {
    const auto state = random_cascade_state(rng, sys.n);
    for (int i = 0; i < sys.n; ++i) {
      for (int k = 0; k <= max_order; ++k) {
        const std::string ctx = "i=" + std::to_string(i + 1) + " k=" + std::to_string(k) +
                                " state=" + state_text(state);
        t.compare(cache.evaluate(lflg_word(i, k), state), cascade_lflg(sys, i, k, state),
                  "lflg " + ctx);
        t.compare(cache.evaluate(lglflg_word(i, k), state), cascade_lglflg(sys, i, k, state),
                  "lglflg " + ctx);
      }
    }
  }
}

PropertyResult check_closed_forms(const VerifyOptions& o, Rng& rng) {
  Tally t("closed_form_observables");
  for (int c = 0; c < o.cases; ++c) lemma_closed_forms(random_cascade(rng), rng, o.max_order, 10, t);
  return std::move(t).result();
}

// L_{X1}...L_{Xk} h_j = sum over selections of prod(u_l for selected l) L_mu h_j
PropertyResult check_expansion(const VerifyOptions& o, Rng& rng) {
  Tally t("input_polynomial_expansion");
  for (int c = 0; c < o.cases; ++c) {
    const auto cas = random_cascade(rng);
    const auto sys = as_control_affine(cas);
    const ObservableCache cache(sys);
    const auto state = random_cascade_state(rng, cas.n);
    const int k = static_cast<int>(rng.below(4));
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(cas.n)));
    std::vector<double> u(static_cast<std::size_t>(k));
    for (auto& v : u) v = rng.uniform(-2.0, 2.0);

    double expected = 0.0;
    for (unsigned mask = 0; mask < (1u << k); ++mask) {
      ObservableWord w{j, {}};
      double coeff = 1.0;
      for (int l = k - 1; l >= 0; --l) {  // X_k is applied first
        const bool input = (mask >> l) & 1u;
        w.mu.push_back(input ? 1 : 0);
        if (input) coeff *= u[static_cast<std::size_t>(l)];
      }
      expected += coeff * cache.evaluate(w, state);
    }
    const double got = nested_lie_along_affine(sys, u, j, state);
    t.compare(got, expected, "k=" + std::to_string(k) + " state=" + state_text(state));
  }
  return std::move(t).result();
}

PropertyResult check_memo(const VerifyOptions& o, Rng& rng) {
  Tally t("memoized_matches_fresh");
  for (int c = 0; c < o.cases; ++c) {
    const auto cas = random_cascade(rng);
    const auto sys = as_control_affine(cas);
    const ObservableCache cache(sys);
    const auto state = random_cascade_state(rng, cas.n);
    for (int rep = 0; rep < 3; ++rep) {
      ObservableWord w{static_cast<int>(rng.below(static_cast<std::uint64_t>(cas.n))), {}};
      const int len = static_cast<int>(rng.below(5));
      for (int l = 0; l < len; ++l) w.mu.push_back(static_cast<int>(rng.below(2)));
      const double memo = cache.evaluate(w, state);
      const double fresh = eval(iterated_observable(sys, w), [&] {
        Env env;
        for (std::size_t v = 0; v < sys.state.size(); ++v) env[sys.state[v]] = state[v];
        return env;
      }());
      t.compare(memo, fresh, to_string(w) + " state=" + state_text(state), 1e-10);
    }
  }
  return std::move(t).result();
}

// Any certificate with a witness must reproduce its values when the witness
// observable is evaluated through the generic Lie-derivative route.
PropertyResult check_separation(const VerifyOptions& o, Rng& rng) {
  Tally t("separation_certificates_sound");
  for (int c = 0; c < o.cases; ++c) {
    const auto cas = random_cascade(rng);
    const ObservableCache cache(as_control_affine(cas), 2 * kDefaultMaxDerivativeOrder + 1);
    auto s0 = random_cascade_state(rng, cas.n);
    auto s1 = random_cascade_state(rng, cas.n);
    if (rng.coin(0.3)) std::copy(s0.begin(), s0.begin() + cas.n, s1.begin());
    else if (rng.coin(0.3)) std::copy(s0.begin() + cas.n, s0.end(), s1.begin() + cas.n);
    if (s0 == s1) s1[0] += 0.5;
    SeparationOptions so;
    so.max_order = 6;
    const auto cert = find_separating_observable(cas, s0, s1, so);
    const std::string ctx = "s0=" + state_text(s0) + " s1=" + state_text(s1);
    if (cert.verdict != SeparationVerdict::Separated) {
      t.check(false, 0.0, ctx + ": no separating observable found");
      continue;
    }
    const double a = cache.evaluate(*cert.witness, s0);
    const double b = cache.evaluate(*cert.witness, s1);
    const bool ok = close_values(a, cert.value0, 1e-7) && close_values(b, cert.value1, 1e-7) &&
                    separated_values(a, b, so.sep_tol);
    t.check(ok, std::max(rel_error(a, cert.value0), rel_error(b, cert.value1)),
            ctx + " " + to_string(*cert.witness));
  }
  return std::move(t).result();
}

// Equilibria of the closed loop under output feedback with q* = 0 fill the
// whole line (xi, 0, 0).
PropertyResult check_feedback(const VerifyOptions& o, Rng& rng) {
  Tally t("output_feedback_equilibria");
  for (int c = 0; c < o.cases; ++c) {
    CascadeSystem cas = random_cascade(rng, 1);
    cas.drift = {parse("-z1 + 0.5*z1^2", {"z1"})};
    const double kq = rng.uniform(0.2, 2.0);
    const double ky = rng.uniform(-2.0, 2.0);
    const auto law = FeedbackLaw::parse(1, {"-" + fmt(kq) + "*q1 + y1"},
                                        fmt(ky) + "*y1 + q1");
    std::vector<double> grid;
    for (int g = 0; g < 5; ++g) grid.push_back(rng.uniform(-1.5, 1.5));
    for (const auto& r : output_feedback_equilibria_check(cas, law, {0.0}, grid))
      t.check(r.residual <= 1e-12, r.residual, "xi=" + fmt(r.xi));
  }
  return std::move(t).result();
}

}  // namespace

const std::vector<std::string>& sensor_catalog() {
  static const std::vector<std::string> catalog = {
      "sin(x)",
      "exp(-x^2)",
      "2 + sin(x) + 0.1*x",
      "tanh(x)",
      "cos(2*x) + x",
      "x^3 - x",
      "exp(x)*cos(x)",
      "sqrt(x^2 + 1)",
      "ln(x^2 + 1) + 0.5",
      "1/(x + 2)",
      "tan(0.5*x)",
      "exp(-x^2/2)*sin(3*x)",
  };
  return catalog;
}

CascadeSystem random_cascade(Rng& rng, int max_n) {
  CascadeSystem sys;
  sys.n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(max_n, 1))));
  const auto zs = z_names(sys.n);
  const std::set<std::string> zset(zs.begin(), zs.end());
  const auto& cat = sensor_catalog();
  for (int i = 0; i < sys.n; ++i) {
    sys.gamma.push_back(parse(cat[rng.below(cat.size())], {"x"}));
    const std::string zi = zs[static_cast<std::size_t>(i)];
    const std::string zj = zs[rng.below(zs.size())];
    const std::string templates[] = {
        "-" + zi,
        "-0.5*" + zi + " + 0.2*" + zj + "^2",
        "sin(" + zj + ") - " + zi,
        "-" + zi + "^3",
        "0",
    };
    sys.drift.push_back(parse(templates[rng.below(5)], zset));
    const double mag = rng.uniform(0.2, 3.0);
    sys.b.push_back(rng.coin(0.5) ? mag : -mag);
  }
  return sys;
}

std::vector<double> random_cascade_state(Rng& rng, int n) {
  std::vector<double> s(static_cast<std::size_t>(2 * n));
  for (int i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = rng.uniform(-1.5, 1.5);
  for (int i = n; i < 2 * n; ++i) s[static_cast<std::size_t>(i)] = rng.uniform(-2.0, 2.0);
  return s;
}

bool close_values(double a, double b, double rel, double abs_floor) {
  if (!std::isfinite(a) || !std::isfinite(b)) return false;
  return std::fabs(a - b) <= rel * std::max(std::fabs(a), std::fabs(b)) + abs_floor;
}

bool VerifyReport::passed() const {
  return std::all_of(properties.begin(), properties.end(),
                     [](const PropertyResult& p) { return p.passed; });
}

VerifyReport run_verify(const VerifyOptions& o) {
  VerifyReport report;
  report.options = o;
  Rng rng(o.seed);
  report.properties.push_back(check_closed_forms(o, rng));
  report.properties.push_back(check_expansion(o, rng));
  report.properties.push_back(check_memo(o, rng));
  report.properties.push_back(check_separation(o, rng));
  report.properties.push_back(check_feedback(o, rng));
  if (o.system) {
    Tally t("closed_form_observables_on_system");
    lemma_closed_forms(*o.system, rng, o.max_order, o.cases, t);
    report.properties.push_back(std::move(t).result());
  }
  return report;
}

Json to_json(const VerifyReport& report) {
  Json j;
  j["seed"] = report.options.seed;
  j["cases"] = report.options.cases;
  j["kmax"] = report.options.max_order;
  j["system"] = report.options.system ? to_json(*report.options.system) : Json(nullptr);
  Json props = Json::array();
  for (const auto& p : report.properties) {
    props.push_back({{"name", p.name},
                     {"passed", p.passed},
                     {"cases", p.cases},
                     {"failures", p.failures},
                     {"max_error", p.max_error},
                     {"first_failure", p.first_failure.empty() ? Json(nullptr) : Json(p.first_failure)}});
  }
  j["properties"] = props;
  j["passed"] = report.passed();
  return j;
}

}  // namespace obsvlab
