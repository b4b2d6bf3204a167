// Acceptance suite. One line per criterion; exit status 1 if any fails.
//
// Usage: acceptance [path/to/obsv-lab]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

#include "obsvlab/gramian.hpp"
#include "obsvlab/obsv.hpp"
#include "obsvlab/sim.hpp"
#include "obsvlab/verify.hpp"

using namespace obsvlab;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-300});
}

Outcome closed_forms() {
  Rng rng(101);
  int cases = 0;
  int bad = 0;
  double worst = 0.0;
  for (int c = 0; c < 20; ++c) {
    const auto sys = random_cascade(rng, 3);
    const ObservableCache oracle(as_control_affine(sys), 11);
    for (int t = 0; t < 10; ++t) {
      const auto s = random_cascade_state(rng, sys.n);
      for (int i = 0; i < sys.n; ++i) {
        for (int k = 0; k <= 5; ++k) {
          const double pairs[2][2] = {
              {cascade_lflg(sys, i, k, s), oracle.evaluate(lflg_word(i, k), s)},
              {cascade_lglflg(sys, i, k, s), oracle.evaluate(lglflg_word(i, k), s)}};
          for (const auto& p : pairs) {
            ++cases;
            if (!close_values(p[0], p[1], 1e-8)) ++bad;
            else worst = std::max(worst, rel_err(p[0], p[1]));
          }
        }
      }
    }
  }
  return {bad == 0, std::to_string(cases - bad) + "/" + std::to_string(cases) +
                        " agree, max rel err " + sci(worst)};
}

Outcome expansion() {
  Rng rng(102);
  int bad = 0;
  double worst = 0.0;
  for (int c = 0; c < 20; ++c) {
    const auto cas = random_cascade(rng, 3);
    const auto sys = as_control_affine(cas);
    const ObservableCache cache(sys);
    const auto s = random_cascade_state(rng, cas.n);
    const int k = static_cast<int>(rng.below(4));
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(cas.n)));
    std::vector<double> u(static_cast<std::size_t>(k));
    for (auto& v : u) v = rng.uniform(-2.0, 2.0);
    double poly = 0.0;
    for (unsigned mask = 0; mask < (1u << k); ++mask) {
      ObservableWord w{j, {}};
      double coeff = 1.0;
      for (int l = k - 1; l >= 0; --l) {
        const bool input = (mask >> l) & 1u;
        w.mu.push_back(input ? 1 : 0);
        if (input) coeff *= u[static_cast<std::size_t>(l)];
      }
      poly += coeff * cache.evaluate(w, s);
    }
    const double direct = nested_lie_along_affine(sys, u, j, s);
    if (!close_values(direct, poly, 1e-8)) ++bad;
    worst = std::max(worst, rel_err(direct, poly));
  }
  return {bad == 0, std::to_string(20 - bad) + "/20 agree, max rel err " + sci(worst)};
}

Outcome indistinguishability() {
  const auto sys = preset("periodic-sin");
  const auto e = indistinguishability_experiment(
      sys, {kTwoPi}, {InputSignal::zero(), InputSignal::constant(1.0), InputSignal::sinusoid(1.0, 1.0)},
      10.0, 1e-3);
  double worst = 0.0;
  for (double g : e.gaps) worst = std::max(worst, g);
  const auto half = indistinguishability_experiment(sys, {std::numbers::pi}, {InputSignal::sinusoid(1.0, 1.0)},
                                                    10.0, 1e-3);
  const bool ok = worst <= 1e-6 && half.gaps[0] > 1e-3;
  return {ok, "T=2pi max gap " + sci(worst) + " (<= 1e-6), T=pi gap " + sci(half.gaps[0]) + " (> 1e-3)"};
}

Outcome distinguishability() {
  Rng rng(104);
  int certified = 0;
  int total = 0;
  int max_order = 0;
  double min_gap = std::numeric_limits<double>::infinity();
  std::string first_problem;
  constexpr int kOrderCap = 8;
  SeparationOptions so;
  so.max_order = kOrderCap;
  for (const char* name : {"fish-1d-gauss", "fish-1d-tilted"}) {
    const auto sys = preset(name);
    const ObservableCache oracle(as_control_affine(sys), 2 * kOrderCap + 1);
    for (int p = 0; p < 50; ++p) {
      std::vector<double> s0{rng.uniform(-3.0, 3.0), rng.uniform(-2.0, 2.0)};
      std::vector<double> s1{rng.uniform(-3.0, 3.0), rng.uniform(-2.0, 2.0)};
      if (p % 5 == 1) s1[0] = s0[0];
      if (p % 5 == 2) s1[1] = s0[1];
      if (p % 5 == 3) s0[1] = s1[1] = 0.0;
      if (p % 5 == 4) s1 = {-s0[0], s0[1]};
      if (s0 == s1) s1[0] += 1.0;
      ++total;
      const auto c = find_separating_observable(sys, s0, s1, so);
      if (c.verdict != SeparationVerdict::Separated) {
        if (first_problem.empty()) first_problem = std::string(name) + " pair without certificate";
        continue;
      }
      const double a = oracle.evaluate(*c.witness, s0);
      const double b = oracle.evaluate(*c.witness, s1);
      const double gap = std::fabs(a - b);
      if (c.order > kOrderCap || !(gap > so.sep_tol)) {
        if (first_problem.empty()) first_problem = std::string(name) + " witness " + to_string(*c.witness);
        continue;
      }
      ++certified;
      max_order = std::max(max_order, c.order);
      min_gap = std::min(min_gap, gap);
    }
  }
  std::string detail = std::to_string(certified) + "/" + std::to_string(total) +
                       " certified, max witness order " + std::to_string(max_order) +
                       ", min re-evaluated gap " + sci(min_gap);
  if (!first_problem.empty()) detail += "; " + first_problem;
  return {certified == total, detail};
}

Outcome local_rank_vs_condition() {
  Rng rng(105);
  int agree = 0;
  int total = 0;
  int hyperbolic_deficient = 0;
  for (const char* g : {"exp(-x^2)", "sin(x)", "1/(x+2)"}) {
    const auto cas = simple_system(g);
    const auto sys = as_control_affine(cas);
    const bool hyperbolic = std::string(g) == "1/(x+2)";
    for (int t = 0; t < 100; ++t) {
      const double x = rng.uniform(-1.5, 1.5);
      const double z = rng.coin(0.2) ? 0.0 : rng.uniform(-2.0, 2.0);
      const bool nonzero = std::fabs(simple_rank_condition(cas.gamma[0], x, z)) > 1e-10;
      const bool full = local_rank(sys, std::vector<double>{x, z}).full_rank();
      ++total;
      agree += full == nonzero;
      if (hyperbolic && !full) ++hyperbolic_deficient;
    }
  }
  return {agree == total && hyperbolic_deficient == 100,
          std::to_string(agree) + "/" + std::to_string(total) + " agree, 1/(x+2) deficient at " +
              std::to_string(hyperbolic_deficient) + "/100"};
}

Outcome linear_unobservability() {
  int checked = 0;
  int rank_one = 0;
  std::string names;
  for (const auto& info : preset_catalog()) {
    const auto cas = preset(info.name);
    if (cas.n != 1) continue;
    names += (names.empty() ? "" : ",") + info.name;
    const auto sys = as_control_affine(cas);
    for (int k = 0; k < 10; ++k) {
      const double xs = -1.9 + 0.41 * k;
      const auto lin = linearize_at(sys, Eigen::Vector2d(xs, 0.0));
      ++checked;
      rank_one += numerical_rank(observability_matrix(lin.A, lin.C)) == 1;
    }
  }
  return {rank_one == checked,
          std::to_string(rank_one) + "/" + std::to_string(checked) + " equilibria with rank 1 (" + names + ")"};
}

Outcome feedback_continuum() {
  const auto sys = preset("fish-1d-gauss");
  const std::vector<double> grid{-5.0, -1.0, 0.0, 1.0, 5.0};
  double worst = 0.0;
  const auto stat = output_feedback_equilibria_check(sys, FeedbackLaw::parse(1, {}, "-y1"), {}, grid);
  const auto dyn = output_feedback_equilibria_check(sys, FeedbackLaw::parse(1, {"y1"}, "-y1 - q1"), {0.0}, grid);
  for (const auto* table : {&stat, &dyn})
    for (const auto& r : *table) worst = std::max(worst, r.residual);
  return {worst <= 1e-12, "max residual " + sci(worst) + " over 2 laws x 5 points"};
}

Outcome gramian_contrast() {
  const auto sys = as_control_affine(preset("fish-1d-gauss"));
  const std::vector<double> rest{0.0, 0.0};
  const auto idle = empirical_gramian(sys, rest, InputSignal::zero(), kDefaultEps, 10.0, 1e-3);
  const auto active = empirical_gramian(sys, rest, InputSignal::sinusoid(1.0, kTwoPi), kDefaultEps, 10.0, 1e-3);
  return {idle.sigma_min <= 1e-12 && active.sigma_min > 1e-6,
          "sigma_min zero input " + sci(idle.sigma_min) + " (<= 1e-12), sin(2 pi t) " + sci(active.sigma_min) +
              " (> 1e-6)"};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism(const char* cli) {
  const std::string a = to_json(run_verify({})).dump(2);
  const std::string b = to_json(run_verify({})).dump(2);
  if (a != b) return {false, "in-process reports differ"};
  if (!cli) return {true, "in-process reports identical (" + std::to_string(a.size()) + " bytes); CLI not given"};
  const std::string base = std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") +
                           "/obsvlab_accept_" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count());
  int rc[2];
  std::string out[2];
  for (int r = 0; r < 2; ++r) {
    const std::string file = base + "_" + std::to_string(r) + ".json";
    const std::string cmd = std::string("\"") + cli + "\" verify --seed 0 --format json --out \"" + file + "\"";
    rc[r] = std::system(cmd.c_str());
    out[r] = slurp(file);
    std::remove(file.c_str());
  }
  const bool ok = rc[0] == 0 && rc[1] == 0 && !out[0].empty() && out[0] == out[1];
  return {ok, "two CLI runs " + std::string(out[0] == out[1] ? "byte-identical" : "differ") + " (" +
                  std::to_string(out[0].size()) + " bytes), exit " + std::to_string(rc[0]) + "/" +
                  std::to_string(rc[1])};
}

}  // namespace

int main(int argc, char** argv) {
  const char* cli = argc > 1 ? argv[1] : nullptr;
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"closed-form observables match generic Lie derivatives", closed_forms},
      {"input expansion coefficients are elementary observables", expansion},
      {"period shift is indistinguishable, half period is not", indistinguishability},
      {"aperiodic presets: every state pair separated", distinguishability},
      {"local rank matches z^2(2g'^2 - g g'')", local_rank_vs_condition},
      {"linearization at rest has observability rank 1", linear_unobservability},
      {"output feedback leaves a continuum of equilibria", feedback_continuum},
      {"active sensing lifts the Gramian from singular", gramian_contrast},
      {"verify reports are deterministic", [cli] { return determinism(cli); }},
  };
  int failed = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %d %s: %s [%.2fs]\n", o.pass ? "PASS" : "FAIL", index, c.name, o.detail.c_str(), secs);
    failed += !o.pass;
  }
  std::printf("%d/%d criteria passed\n", index - failed, index);
  return failed == 0 ? 0 : 1;
}
