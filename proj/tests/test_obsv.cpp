#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "obsvlab/obsv.hpp"
#include "obsvlab/verify.hpp"

using namespace obsvlab;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Expr gx(const char* s) { return parse(s, {"x"}); }

}  // namespace

TEST(ClosedForm, FirstOrderExamples) {
  const auto sys = simple_system("sin(x)", "-z1", 2.0);
  const std::vector<double> s{0.0, 3.0};
  const ObservableCache oracle(as_control_affine(sys));
  EXPECT_NEAR(cascade_lflg(sys, 0, 1, s), 6.0, 1e-15);
  EXPECT_NEAR(oracle.evaluate(lflg_word(0, 1), s), 6.0, 1e-15);
  EXPECT_NEAR(cascade_lglflg(sys, 0, 1, s), 4.0, 1e-15);
  EXPECT_NEAR(oracle.evaluate(lglflg_word(0, 1), s), 4.0, 1e-15);
}

TEST(ClosedForm, OrderZeroIsOutput) {
  const auto sys = preset("pair-gauss-sin");
  const std::vector<double> s{0.3, 1.2, -0.4, 2.0};
  EXPECT_DOUBLE_EQ(cascade_lflg(sys, 0, 0, s), std::exp(-0.09) * -0.4);
  EXPECT_DOUBLE_EQ(cascade_lflg(sys, 1, 0, s), std::sin(1.2) * 2.0);
}

TEST(ClosedForm, VanishesAtZeroVelocity) {
  const auto sys = simple_system("exp(-x^2)", "-z1", 1.7);
  for (int k = 0; k <= 8; ++k) EXPECT_EQ(cascade_lflg(sys, 0, k, std::vector<double>{0.4, 0.0}), 0.0);
}

TEST(ClosedForm, ConstantSensor) {
  const auto sys = simple_system("2.5", "-z1", -1.5);
  EXPECT_DOUBLE_EQ(cascade_lglflg(sys, 0, 0, std::vector<double>{0.9, 4.0}), -3.75);
  EXPECT_EQ(cascade_lglflg(sys, 0, 1, std::vector<double>{0.9, 4.0}), 0.0);
}

TEST(ClosedForm, Bounds) {
  const auto sys = simple_system("sin(x)");
  EXPECT_THROW(cascade_lflg(sys, 1, 0, std::vector<double>{0, 0}), std::out_of_range);
  EXPECT_THROW(cascade_lflg(sys, 0, 0, std::vector<double>{0}), std::invalid_argument);
  EXPECT_THROW(cascade_lflg(sys, 0, 13, std::vector<double>{0, 0}), OrderExceeded);
}

TEST(ClosedFormProperty, MatchesGenericLieDerivatives) {
  Rng rng(41);
  int compared = 0;
  for (int c = 0; c < 20; ++c) {
    const auto cas = random_cascade(rng);
    const ObservableCache oracle(as_control_affine(cas), 11);
    for (int t = 0; t < 10; ++t) {
      const auto s = random_cascade_state(rng, cas.n);
      for (int i = 0; i < cas.n; ++i) {
        for (int k = 0; k <= 5; ++k) {
          EXPECT_TRUE(close_values(cascade_lflg(cas, i, k, s), oracle.evaluate(lflg_word(i, k), s)))
              << "sys " << c << " i=" << i << " k=" << k;
          EXPECT_TRUE(close_values(cascade_lglflg(cas, i, k, s), oracle.evaluate(lglflg_word(i, k), s)))
              << "sys " << c << " i=" << i << " k=" << k;
          compared += 2;
        }
      }
    }
  }
  EXPECT_GE(compared, 20 * 10 * 12);
}

TEST(Period, Sine) {
  const auto v = detect_period(gx("sin(x)"));
  EXPECT_EQ(v.classification, Periodicity::Periodic);
  ASSERT_TRUE(v.period);
  EXPECT_LE(std::fabs(*v.period - kTwoPi), 1e-6);
  EXPECT_FALSE(v.constant);
}

TEST(Period, SmallerPeriods) {
  const auto v = detect_period(gx("cos(3*x) + 0.5*sin(6*x)"));
  ASSERT_EQ(v.classification, Periodicity::Periodic);
  EXPECT_LE(std::fabs(*v.period - kTwoPi / 3.0), 1e-6);
  const auto w = detect_period(gx("sin(x)^2"));
  ASSERT_EQ(w.classification, Periodicity::Periodic);
  EXPECT_LE(std::fabs(*w.period - std::numbers::pi), 1e-6);
}

TEST(Period, TiltedSineIsFalsifiedAtLowOrder) {
  const auto v = detect_period(gx("sin(x) + 0.1*x"));
  EXPECT_EQ(v.classification, Periodicity::Aperiodic);
  ASSERT_FALSE(v.candidates.empty());
  bool low_order_evidence = false;
  for (const auto& c : v.candidates) {
    EXPECT_FALSE(c.accepted);
    EXPECT_GT(c.residual, 1e-8);
    if (c.mismatch && c.mismatch->k <= 1) low_order_evidence = true;
  }
  EXPECT_TRUE(low_order_evidence);
}

TEST(Period, ConstantsAdmitEveryPeriod) {
  const auto v = detect_period(gx("1"));
  EXPECT_EQ(v.classification, Periodicity::Periodic);
  EXPECT_TRUE(v.constant);
  EXPECT_TRUE(detect_period(gx("sin(x)^2 + cos(x)^2")).constant);
}

TEST(Period, NearPeriodicIsUndetermined) {
  EXPECT_EQ(detect_period(gx("sin(x) + 1e-6*x")).classification, Periodicity::Undetermined);
}

TEST(Period, AperiodicExamples) {
  for (const char* s : {"exp(-x^2)", "x", "tanh(x)", "sin(x) + sin(1.4142135623730951*x)"}) {
    EXPECT_EQ(detect_period(gx(s)).classification, Periodicity::Aperiodic) << s;
  }
}

TEST(Period, DomainErrorsPropagate) {
  EXPECT_THROW(detect_period(gx("1/(x+2)"), PeriodOptions{{-4.0, 4.0}, 65}), DomainError);
  PeriodOptions shifted;
  shifted.window = {-1.5, 20.0};
  EXPECT_EQ(detect_period(gx("1/(x+2)"), shifted).classification, Periodicity::Aperiodic);
}

TEST(Period, CheckSpecificShift) {
  EXPECT_TRUE(check_period(gx("sin(x)"), kTwoPi).accepted);
  EXPECT_TRUE(check_period(gx("sin(x)"), -kTwoPi).accepted);
  const auto c = check_period(gx("sin(x)"), std::numbers::pi);
  EXPECT_FALSE(c.accepted);
  ASSERT_TRUE(c.mismatch);
  EXPECT_EQ(c.mismatch->k, 0);
}

TEST(PeriodProperty, AperiodicVerdictsCarryDerivativeMismatches) {
  const PeriodOptions o;
  for (const auto& s : sensor_catalog()) {
    PeriodOptions po;
    po.window = {-1.5, 1.5};  // catalog functions are finite here
    const Expr g = gx(s.c_str());
    const auto v = detect_period(g, po);
    if (v.classification != Periodicity::Aperiodic) continue;
    ASSERT_EQ(v.probe_evidence.size(), static_cast<std::size_t>(po.probes)) << s;
    for (const auto& m : v.probe_evidence) {
      EXPECT_NE(m.r, m.s);
      EXPECT_LE(m.k, o.max_order);
      const double a = nth_derivative_at(g, "x", m.k, m.r);
      const double b = nth_derivative_at(g, "x", m.k, m.s);
      EXPECT_EQ(a, m.value_r);
      EXPECT_EQ(b, m.value_s);
      EXPECT_GT(std::fabs(a - b), 1e-8 * std::max(std::fabs(a), std::fabs(b))) << s;
    }
  }
}

TEST(SystemPeriodicity, Verdicts) {
  EXPECT_EQ(is_aperiodic_system(preset("fish-1d-gauss")).overall, Periodicity::Aperiodic);
  const auto pair = is_aperiodic_system(preset("pair-gauss-sin"));
  EXPECT_EQ(pair.overall, Periodicity::Periodic);
  EXPECT_EQ(pair.per_sensor[0].classification, Periodicity::Aperiodic);
  EXPECT_EQ(pair.per_sensor[1].classification, Periodicity::Periodic);

  CascadeSystem constants = preset("pair-gauss-sin");
  constants.gamma = {gx("1"), gx("-2")};
  EXPECT_EQ(is_aperiodic_system(constants).overall, Periodicity::Periodic);
  EXPECT_THROW(is_aperiodic_system(simple_system("x", "-z1", 0.0)), ValidationError);
}

TEST(Separation, DerivativeScan) {
  const auto sys = simple_system("2 + sin(x)");
  const std::vector<double> s0{0.0, 1.0};
  const std::vector<double> s1{std::numbers::pi, 1.0};
  const auto c = find_separating_observable(sys, s0, s1);
  ASSERT_EQ(c.verdict, SeparationVerdict::Separated);
  EXPECT_EQ(*c.witness, lglflg_word(0, 1));
  EXPECT_EQ(c.family, "lglflg");
  EXPECT_EQ(c.order, 1);
  EXPECT_NEAR(c.value0, 1.0, 1e-15);
  EXPECT_NEAR(c.value1, -1.0, 1e-15);
}

TEST(Separation, VelocityOnly) {
  const auto c = find_separating_observable(preset("fish-1d-gauss"), std::vector<double>{0, 1},
                                            std::vector<double>{0, 2});
  ASSERT_EQ(c.verdict, SeparationVerdict::Separated);
  EXPECT_EQ(*c.witness, (ObservableWord{0, {}}));
  EXPECT_EQ(c.value0, 1.0);
  EXPECT_EQ(c.value1, 2.0);
}

TEST(Separation, PeriodicShiftIsIndistinguishable) {
  const auto c = find_separating_observable(preset("periodic-sin"), std::vector<double>{0, 0},
                                            std::vector<double>{kTwoPi, 0});
  EXPECT_EQ(c.verdict, SeparationVerdict::IndistinguishableByConstruction);
  ASSERT_TRUE(c.shift);
  EXPECT_EQ((*c.shift)[0], kTwoPi);
  EXPECT_FALSE(c.witness);
}

TEST(Separation, BoundedSearchFailure) {
  // Every derivative of a polynomial of degree 2 past order 2 vanishes; the two
  // states agree on all of them only if the polynomial is symmetric about 0.
  const auto c = find_separating_observable(simple_system("x^2 + 1"), std::vector<double>{-1, 0},
                                            std::vector<double>{1, 0}, SeparationOptions{0});
  EXPECT_EQ(c.verdict, SeparationVerdict::NotSeparatedWithinBounds);
  const auto d = find_separating_observable(simple_system("x^2 + 1"), std::vector<double>{-1, 0},
                                            std::vector<double>{1, 0});
  EXPECT_EQ(d.verdict, SeparationVerdict::Separated);
  EXPECT_EQ(d.order, 1);
}

TEST(Separation, EqualStatesRejected) {
  EXPECT_THROW(find_separating_observable(preset("fish-1d-gauss"), std::vector<double>{0, 1},
                                          std::vector<double>{0, 1}),
               std::invalid_argument);
}

TEST(SeparationProperty, CertificatesAreSound) {
  Rng rng(42);
  for (int c = 0; c < 40; ++c) {
    const auto cas = random_cascade(rng);
    auto s0 = random_cascade_state(rng, cas.n);
    auto s1 = random_cascade_state(rng, cas.n);
    if (rng.coin(0.4)) std::copy(s0.begin(), s0.begin() + cas.n, s1.begin());
    const auto cert = find_separating_observable(cas, s0, s1);
    if (cert.verdict != SeparationVerdict::Separated) continue;
    const auto sys = as_control_affine(cas);
    Env e0, e1;
    for (std::size_t v = 0; v < sys.state.size(); ++v) {
      e0[sys.state[v]] = s0[v];
      e1[sys.state[v]] = s1[v];
    }
    const Expr w = iterated_observable(sys, *cert.witness, 2 * kDefaultMaxDerivativeOrder + 1);
    const double a = eval(w, e0);
    const double b = eval(w, e1);
    EXPECT_GT(std::fabs(a - b), cert.sep_tol) << to_string(*cert.witness);
    EXPECT_TRUE(close_values(a, cert.value0, 1e-7));
    EXPECT_TRUE(close_values(b, cert.value1, 1e-7));
  }
}

TEST(SeparationProperty, PresetsAgreeWithPeriodicity) {
  Rng rng(43);
  for (const char* name : {"fish-1d-gauss", "fish-1d-tilted"}) {
    const auto sys = preset(name);
    for (int p = 0; p < 50; ++p) {
      auto s0 = random_cascade_state(rng, 1);
      auto s1 = random_cascade_state(rng, 1);
      if (p % 3 == 0) s1[1] = s0[1];
      const auto c = find_separating_observable(sys, s0, s1);
      EXPECT_EQ(c.verdict, SeparationVerdict::Separated) << name;
      EXPECT_LE(c.order, 8);
    }
  }
  const auto sine = preset("periodic-sin");
  for (int m = -3; m <= 3; ++m) {
    if (m == 0) continue;
    const double z = rng.uniform(-2.0, 2.0);
    const double x = rng.uniform(-1.0, 1.0);
    const auto c = find_separating_observable(sine, std::vector<double>{x, z},
                                              std::vector<double>{x + m * kTwoPi, z});
    EXPECT_EQ(c.verdict, SeparationVerdict::IndistinguishableByConstruction) << m;
  }
}

TEST(LocalRank, Examples) {
  const auto gauss = as_control_affine(preset("fish-1d-gauss"));
  const auto full = local_rank(gauss, std::vector<double>{0.0, 1.0});
  EXPECT_EQ(full.rank, 2);
  EXPECT_EQ(full.dim, 2);
  EXPECT_TRUE(full.full_rank());
  EXPECT_EQ(full.words.size(), 4u);
  EXPECT_LT(local_rank(gauss, std::vector<double>{0.0, 0.0}).rank, 2);
  EXPECT_LT(local_rank(as_control_affine(preset("fish-1d-hyperbolic")), std::vector<double>{0.0, 1.0}).rank, 2);
  EXPECT_DOUBLE_EQ(simple_rank_condition(gx("exp(-x^2)"), 0.0, 1.0), 2.0);
}

TEST(LocalRank, InputWordsRestoreRankAtRest) {
  RankOptions o;
  o.include_input_words = true;
  const auto r = local_rank(as_control_affine(preset("fish-1d-gauss")), std::vector<double>{0.5, 0.0}, o);
  EXPECT_EQ(r.rank, 2);
  EXPECT_EQ(r.words[1].mu, std::vector<int>{0});
  EXPECT_EQ(r.words[2].mu, std::vector<int>{1});
}

TEST(LocalRankProperty, MatchesAnalyticCondition) {
  Rng rng(44);
  for (const char* g : {"exp(-x^2)", "sin(x)", "1/(x+2)"}) {
    const auto cas = simple_system(g);
    const auto sys = as_control_affine(cas);
    int deficient = 0;
    for (int t = 0; t < 100; ++t) {
      const double x = rng.uniform(-1.5, 1.5);
      const double z = rng.coin(0.2) ? 0.0 : rng.uniform(-2.0, 2.0);
      const double cond = simple_rank_condition(cas.gamma[0], x, z);
      const bool full = local_rank(sys, std::vector<double>{x, z}).full_rank();
      EXPECT_EQ(full, std::fabs(cond) > 1e-10) << g << " at (" << x << "," << z << ")";
      deficient += !full;
    }
    if (std::string(g) == "1/(x+2)") EXPECT_EQ(deficient, 100);
  }
}
