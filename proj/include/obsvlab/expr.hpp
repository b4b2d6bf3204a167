#pragma once

// Expression trees for real-analytic scalar functions.
//
// Expr is an immutable, reference-counted handle; subtrees are shared freely
// between expressions (derivatives in particular reuse their operands), so an
// expression is in general a DAG. All operations are pure and thread-safe.

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace obsvlab {

enum class Op {
  Const,
  Var,
  Neg,
  Add,
  Sub,
  Mul,
  Div,
  Pow,  // integer exponent >= 0
  Sin,
  Cos,
  Tan,
  Exp,
  Ln,
  Tanh,
  Sqrt,
};

bool is_function(Op op);
std::string_view function_name(Op op);

class Expr;
class Program;

namespace detail {
struct Node;
}

class Expr {
 public:
  Expr();  // constant 0

  static Expr constant(double value);
  static Expr variable(std::string name);

  // Raw constructors: build exactly the requested node, no simplification.
  static Expr unary(Op op, Expr arg);
  static Expr binary(Op op, Expr lhs, Expr rhs);
  static Expr power(Expr base, int exponent);

  Op op() const;
  double value() const;             // Const only
  const std::string& name() const;  // Var only
  int exponent() const;             // Pow only
  const Expr& arg(std::size_t i) const;
  std::size_t arity() const;

  bool is_constant() const { return op() == Op::Const; }
  bool is_constant(double v) const { return op() == Op::Const && value() == v; }

  // Identity of the shared node; used for memoization.
  const void* id() const { return node_.get(); }

 private:
  explicit Expr(std::shared_ptr<const detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const detail::Node> node_;
};

// Simplifying builders: constant folding, neutral elements and double negation.
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& base, int exponent);
Expr apply(Op function, const Expr& arg);

Expr simplify(const Expr& e);

bool structurally_equal(const Expr& a, const Expr& b);

std::set<std::string> free_variables(const Expr& e);
bool depends_on(const Expr& e, std::string_view var);

// Replace every occurrence of variable `var` with `replacement`.
Expr substitute(const Expr& e, std::string_view var, const Expr& replacement);

// Number of distinct nodes reachable from e.
std::size_t node_count(const Expr& e);

// Prints in the input grammar; print(parse(s)) reparses to an identical tree.
std::string to_string(const Expr& e);

// ---------------------------------------------------------------------------
// Parsing

extern const std::set<std::string> kNoVariables;

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t offset, std::string expected, std::string found);

  std::size_t offset() const { return offset_; }
  const std::string& expected() const { return expected_; }
  const std::string& found() const { return found_; }

 private:
  std::size_t offset_;
  std::string expected_;
  std::string found_;
};

// Grammar:
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := ['-'] atom ['^' integer]
//   atom   := number | ident | func '(' expr ')' | '(' expr ')'
// `pi` and `e` are reserved constants. Identifiers outside `allowed_vars`
// and functions outside the analytic catalog are rejected.
Expr parse(std::string_view source, const std::set<std::string>& allowed_vars);

// ---------------------------------------------------------------------------
// Evaluation and differentiation

class DomainError : public std::runtime_error {
 public:
  DomainError(const std::string& what, std::string subexpression);
  const std::string& subexpression() const { return subexpression_; }

 private:
  std::string subexpression_;
};

class OrderExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Env = std::map<std::string, double, std::less<>>;

// Throws std::invalid_argument if a free variable is unbound.
double eval(const Expr& e, const Env& env);

Expr diff(const Expr& e, std::string_view var);

inline constexpr int kDefaultMaxDerivativeOrder = 12;

// The chain e, e', e'', ... built lazily by repeated diff and memoized.
// Copies share the memo. Safe for concurrent use.
class DerivativeChain {
 public:
  DerivativeChain(Expr base, std::string var, int max_order = kDefaultMaxDerivativeOrder);

  const Expr& base() const { return base_; }
  const std::string& var() const { return var_; }
  int max_order() const { return max_order_; }

  // Throws OrderExceeded if k > max_order.
  Expr derivative(int k) const;
  double at(int k, double x0) const;

 private:
  struct State {
    std::mutex mutex;
    std::vector<Expr> chain;
    std::vector<std::shared_ptr<const Program>> programs;
  };
  Expr base_;
  std::string var_;
  int max_order_;
  std::shared_ptr<State> state_;
};

double nth_derivative_at(const Expr& e, std::string_view var, int k, double x0,
                         int max_order = kDefaultMaxDerivativeOrder);

}  // namespace obsvlab
