#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "generators.hpp"
#include "obsvlab/expr.hpp"
#include "obsvlab/program.hpp"

using namespace obsvlab;

namespace {

const std::set<std::string> X{"x"};

double at(const Expr& e, double x) { return eval(e, {{"x", x}}); }

double central_difference(const Expr& e, double x, double h = 1e-5) {
  return (at(e, x + h) - at(e, x - h)) / (2.0 * h);
}

}  // namespace

TEST(Parse, ProductKeepsOperandOrder) {
  const Expr e = parse("sin(x)*2", X);
  ASSERT_EQ(e.op(), Op::Mul);
  EXPECT_EQ(e.arg(0).op(), Op::Sin);
  EXPECT_EQ(e.arg(0).arg(0).op(), Op::Var);
  EXPECT_EQ(e.arg(0).arg(0).name(), "x");
  EXPECT_TRUE(e.arg(1).is_constant(2.0));
}

TEST(Parse, Reciprocal) {
  const Expr e = parse("1/(x+2)", X);
  ASSERT_EQ(e.op(), Op::Div);
  EXPECT_TRUE(e.arg(0).is_constant(1.0));
  ASSERT_EQ(e.arg(1).op(), Op::Add);
  EXPECT_EQ(e.arg(1).arg(0).name(), "x");
  EXPECT_TRUE(e.arg(1).arg(1).is_constant(2.0));
}

TEST(Parse, UnknownIdentifierReportsItsOffset) {
  try {
    parse("z3 + q", {"z1", "z2", "z3"});
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 5u);
    EXPECT_NE(e.found().find('q'), std::string::npos);
  }
}

TEST(Parse, RejectsFunctionsOutsideCatalog) {
  EXPECT_THROW(parse("abs(x)", X), ParseError);
  EXPECT_THROW(parse("floor(x)", X), ParseError);
}

TEST(Parse, RejectsNonIntegerAndNegativeExponents) {
  EXPECT_THROW(parse("x^0.5", X), ParseError);
  EXPECT_THROW(parse("x^x", X), ParseError);
}

TEST(Parse, MalformedInput) {
  EXPECT_THROW(parse("", X), ParseError);
  EXPECT_THROW(parse("sin(x", X), ParseError);
  EXPECT_THROW(parse("x +", X), ParseError);
  EXPECT_THROW(parse("x x", X), ParseError);
  EXPECT_THROW(parse("()", X), ParseError);
}

TEST(Parse, ConstantsAndExponents) {
  EXPECT_DOUBLE_EQ(eval(parse("pi", kNoVariables), {}), std::numbers::pi);
  EXPECT_DOUBLE_EQ(eval(parse("e", kNoVariables), {}), std::numbers::e);
  EXPECT_DOUBLE_EQ(eval(parse("1.5e2", kNoVariables), {}), 150.0);
  EXPECT_DOUBLE_EQ(eval(parse(" 2 ^ 3 ", kNoVariables), {}), 8.0);
}

TEST(Parse, UnaryMinusBindsLooserThanPower) {
  EXPECT_DOUBLE_EQ(at(parse("-x^2", X), 3.0), -9.0);
  EXPECT_DOUBLE_EQ(at(parse("2 - -x", X), 3.0), 5.0);
  EXPECT_DOUBLE_EQ(at(parse("8/2/2", X), 0.0), 2.0);
  EXPECT_DOUBLE_EQ(at(parse("8-2-2", X), 0.0), 4.0);
}

TEST(Eval, Examples) {
  EXPECT_EQ(at(parse("sin(x)*2", X), 0.0), 0.0);
  EXPECT_EQ(at(parse("exp(-x^2)", X), 0.0), 1.0);
  EXPECT_THROW(at(parse("1/(x+2)", X), -2.0), DomainError);
}

TEST(Eval, DomainErrors) {
  EXPECT_THROW(at(parse("ln(x)", X), 0.0), DomainError);
  EXPECT_THROW(at(parse("ln(x)", X), -1.0), DomainError);
  EXPECT_THROW(at(parse("sqrt(x)", X), -1e-9), DomainError);
  EXPECT_THROW(at(parse("exp(x)", X), 1000.0), DomainError);
  EXPECT_NO_THROW(at(parse("sqrt(x)", X), 0.0));
}

TEST(Eval, DomainErrorNamesSubexpression) {
  try {
    at(parse("sin(x) + ln(x - 1)", X), 0.5);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(e.subexpression().find("ln"), std::string::npos);
  }
}

TEST(Eval, UnboundVariable) {
  EXPECT_THROW(eval(parse("x + y", {"x", "y"}), {{"x", 1.0}}), std::invalid_argument);
}

TEST(Diff, Examples) {
  const Expr d = diff(parse("sin(x)", X), "x");
  EXPECT_TRUE(structurally_equal(d, parse("cos(x)", X))) << to_string(d);
  EXPECT_TRUE(diff(parse("3.5", kNoVariables), "x").is_constant(0.0));
  EXPECT_TRUE(diff(parse("sin(y)", {"y"}), "x").is_constant(0.0));
}

TEST(Diff, GaussianSlopeMatchesFiniteDifference) {
  const Expr g = parse("exp(-x^2)", X);
  const double symbolic = at(diff(g, "x"), 1.0);
  const double fd = central_difference(g, 1.0);
  EXPECT_NEAR(symbolic, -2.0 * std::exp(-1.0), 1e-15);
  EXPECT_NEAR(symbolic, fd, 1e-6 * std::fabs(fd));
}

TEST(Diff, CatalogFunctionsMatchHandDerivatives) {
  struct Case {
    const char* f;
    double (*d)(double);
  };
  const Case cases[] = {
      {"sin(x)", [](double x) { return std::cos(x); }},
      {"cos(x)", [](double x) { return -std::sin(x); }},
      {"tan(x)", [](double x) { return 1.0 / (std::cos(x) * std::cos(x)); }},
      {"exp(x)", [](double x) { return std::exp(x); }},
      {"ln(x)", [](double x) { return 1.0 / x; }},
      {"tanh(x)", [](double x) { return 1.0 - std::tanh(x) * std::tanh(x); }},
      {"sqrt(x)", [](double x) { return 0.5 / std::sqrt(x); }},
      {"x^5", [](double x) { return 5.0 * x * x * x * x; }},
      {"1/x", [](double x) { return -1.0 / (x * x); }},
  };
  for (const auto& c : cases) {
    const Expr d = diff(parse(c.f, X), "x");
    for (double x : {0.3, 0.7, 1.1}) EXPECT_NEAR(at(d, x), c.d(x), 1e-13) << c.f << " at " << x;
  }
}

TEST(DiffProperty, MatchesCentralDifference) {
  Rng rng(11);
  int checked = 0;
  for (int i = 0; i < 50; ++i) {
    const std::string src = testgen::random_expr(rng, 3);
    const Expr e = parse(src, X);
    const Expr d = diff(e, "x");
    const double x = rng.uniform(-2.0, 2.0);
    const double value = at(d, x);
    const double fd = central_difference(e, x);
    EXPECT_LE(std::fabs(value - fd), 1e-5 * (1.0 + std::fabs(value))) << src << " at " << x;
    ++checked;
  }
  EXPECT_EQ(checked, 50);
}

TEST(DiffProperty, Linear) {
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    const Expr e1 = parse(testgen::random_expr(rng, 3), X);
    const Expr e2 = parse(testgen::random_expr(rng, 3), X);
    const double a = rng.uniform(-3.0, 3.0);
    const Expr lhs = diff(Expr::constant(a) * e1 + e2, "x");
    const double x = rng.uniform(-2.0, 2.0);
    const double l = at(lhs, x);
    const double r = a * at(diff(e1, "x"), x) + at(diff(e2, "x"), x);
    EXPECT_LE(std::fabs(l - r), 1e-9 * std::max({std::fabs(l), std::fabs(r), 1e-3}))
        << to_string(e1) << " | " << to_string(e2);
  }
}

TEST(PrintProperty, RoundTrip) {
  Rng rng(13);
  for (int i = 0; i < 200; ++i) {
    const Expr e = parse(testgen::random_expr(rng, 4), X);
    const std::string printed = to_string(e);
    const Expr back = parse(printed, X);
    EXPECT_TRUE(structurally_equal(e, back)) << printed << " vs " << to_string(back);
  }
}

TEST(PrintProperty, RoundTripOfSimplifiedDerivatives) {
  Rng rng(14);
  for (int i = 0; i < 100; ++i) {
    const Expr d = diff(parse(testgen::random_expr(rng, 3), X), "x");
    const std::string printed = to_string(d);
    const Expr back = parse(printed, X);
    EXPECT_TRUE(structurally_equal(d, back)) << printed << " vs " << to_string(back);
  }
}

TEST(NthDerivative, Examples) {
  EXPECT_EQ(nth_derivative_at(parse("sin(x)", X), "x", 4, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(nth_derivative_at(parse("exp(-x^2)", X), "x", 2, 0.0), -2.0);
  EXPECT_EQ(nth_derivative_at(parse("1/(x+2)", X), "x", 0, 0.0), 0.5);
}

TEST(NthDerivative, GaussianSecondDerivativeOracle) {
  const Expr g = parse("exp(-x^2)", X);
  for (double x : {-1.3, -0.2, 0.4, 2.0}) {
    const double oracle = (4.0 * x * x - 2.0) * std::exp(-x * x);
    EXPECT_NEAR(nth_derivative_at(g, "x", 2, x), oracle, 1e-14);
  }
}

TEST(NthDerivative, OrderCap) {
  EXPECT_THROW(nth_derivative_at(parse("sin(x)", X), "x", 13, 0.0), OrderExceeded);
  EXPECT_NO_THROW(nth_derivative_at(parse("sin(x)", X), "x", 13, 0.0, 13));
  EXPECT_THROW(nth_derivative_at(parse("sin(x)", X), "x", -1, 0.0), std::invalid_argument);
}

TEST(NthDerivativeProperty, ShiftsThroughDiff) {
  Rng rng(15);
  for (int i = 0; i < 40; ++i) {
    const Expr e = parse(testgen::random_expr(rng, 2), X);
    const Expr d = diff(e, "x");
    const int k = static_cast<int>(rng.below(4));
    const double x = rng.uniform(-2.0, 2.0);
    EXPECT_EQ(nth_derivative_at(e, "x", k + 1, x), nth_derivative_at(d, "x", k, x)) << to_string(e);
  }
}

TEST(DerivativeChain, CopiesShareMemo) {
  DerivativeChain a(parse("exp(-x^2)", X), "x", 6);
  DerivativeChain b = a;
  const double v = a.at(5, 0.3);
  EXPECT_EQ(b.at(5, 0.3), v);
  EXPECT_TRUE(structurally_equal(a.derivative(5), b.derivative(5)));
}

TEST(Simplify, NeutralElementsAndFolding) {
  const Expr x = Expr::variable("x");
  EXPECT_EQ((x + Expr::constant(0.0)).id(), x.id());
  EXPECT_EQ((Expr::constant(1.0) * x).id(), x.id());
  EXPECT_TRUE((Expr::constant(0.0) * x).is_constant(0.0));
  EXPECT_TRUE((Expr::constant(2.0) * Expr::constant(3.0)).is_constant(6.0));
  EXPECT_EQ((-(-x)).id(), x.id());
  EXPECT_TRUE((x - x).is_constant(0.0));
  EXPECT_EQ(pow(x, 1).id(), x.id());
  EXPECT_TRUE(pow(x, 0).is_constant(1.0));
}

TEST(Simplify, DivisionByZeroConstantIsNotFolded) {
  const Expr e = Expr::constant(1.0) / Expr::constant(0.0);
  EXPECT_FALSE(e.is_constant());
  EXPECT_THROW(eval(e, {}), DomainError);
}

TEST(Substitute, ReplacesVariable) {
  const Expr e = substitute(parse("sin(x)*x", X), "x", Expr::variable("x1"));
  EXPECT_EQ(free_variables(e), std::set<std::string>{"x1"});
  EXPECT_DOUBLE_EQ(eval(e, {{"x1", 0.5}}), std::sin(0.5) * 0.5);
}

TEST(Program, SharesCommonSubexpressions) {
  const Expr x = Expr::variable("x");
  const Expr s = apply(Op::Sin, x);
  const Expr twice = Expr::binary(Op::Add, s, apply(Op::Sin, x));
  const Program p(twice, {"x"});
  EXPECT_EQ(p.size(), 3u);  // x, sin(x), add
  EXPECT_DOUBLE_EQ(p.run1(0.5), 2.0 * std::sin(0.5));
}

TEST(Program, MultipleRoots) {
  const std::vector<Expr> roots{parse("x + y", {"x", "y"}), parse("x*y", {"x", "y"})};
  const Program p(roots, {"x", "y"});
  std::vector<double> in{2.0, 3.0};
  std::vector<double> out(2);
  p.run(in, out);
  EXPECT_EQ(out[0], 5.0);
  EXPECT_EQ(out[1], 6.0);
}
