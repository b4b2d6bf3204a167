#include "obsvlab/expr.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <functional>
#include <unordered_map>
#include <unordered_set>

#include "obsvlab/program.hpp"

namespace obsvlab {

namespace detail {
struct Node {
  Op op = Op::Const;
  double value = 0.0;
  std::string name;
  int exponent = 0;
  std::vector<Expr> args;
  std::size_t arity = 0;
};
}  // namespace detail

namespace {

using detail::Node;

std::shared_ptr<Node> make_node(Op op) {
  auto n = std::make_shared<Node>();
  n->op = op;
  return n;
}

bool is_binary(Op op) {
  return op == Op::Add || op == Op::Sub || op == Op::Mul || op == Op::Div;
}

}  // namespace

bool is_function(Op op) {
  switch (op) {
    case Op::Sin:
    case Op::Cos:
    case Op::Tan:
    case Op::Exp:
    case Op::Ln:
    case Op::Tanh:
    case Op::Sqrt:
      return true;
    default:
      return false;
  }
}

std::string_view function_name(Op op) {
  switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Tan: return "tan";
    case Op::Exp: return "exp";
    case Op::Ln: return "ln";
    case Op::Tanh: return "tanh";
    case Op::Sqrt: return "sqrt";
    default: return "";
  }
}

// ---------------------------------------------------------------------------
// Raw construction

Expr::Expr() : Expr(constant(0.0)) {}

Expr Expr::constant(double value) {
  auto n = make_node(Op::Const);
  n->value = value;
  return Expr(std::move(n));
}

Expr Expr::variable(std::string name) {
  if (name.empty()) throw std::invalid_argument("variable name must be nonempty");
  auto n = make_node(Op::Var);
  n->name = std::move(name);
  return Expr(std::move(n));
}

Expr Expr::unary(Op op, Expr arg) {
  if (op != Op::Neg && !is_function(op)) throw std::invalid_argument("not a unary operator");
  auto n = make_node(op);
  n->args.push_back(std::move(arg));
  n->arity = 1;
  return Expr(std::move(n));
}

Expr Expr::binary(Op op, Expr lhs, Expr rhs) {
  if (!is_binary(op)) throw std::invalid_argument("not a binary operator");
  auto n = make_node(op);
  n->args.push_back(std::move(lhs));
  n->args.push_back(std::move(rhs));
  n->arity = 2;
  return Expr(std::move(n));
}

Expr Expr::power(Expr base, int exponent) {
  if (exponent < 0) throw std::invalid_argument("power exponent must be a nonnegative integer");
  auto n = make_node(Op::Pow);
  n->args.push_back(std::move(base));
  n->exponent = exponent;
  n->arity = 1;
  return Expr(std::move(n));
}

Op Expr::op() const { return node_->op; }
double Expr::value() const { return node_->value; }
const std::string& Expr::name() const { return node_->name; }
int Expr::exponent() const { return node_->exponent; }
const Expr& Expr::arg(std::size_t i) const { return node_->args.at(i); }
std::size_t Expr::arity() const { return node_->arity; }

// ---------------------------------------------------------------------------
// Simplifying builders

namespace {

double fold_function(Op op, double v, bool& ok) {
  ok = true;
  double r = 0.0;
  switch (op) {
    case Op::Sin: r = std::sin(v); break;
    case Op::Cos: r = std::cos(v); break;
    case Op::Tan: r = std::tan(v); break;
    case Op::Exp: r = std::exp(v); break;
    case Op::Ln:
      if (v <= 0.0) ok = false;
      else r = std::log(v);
      break;
    case Op::Tanh: r = std::tanh(v); break;
    case Op::Sqrt:
      if (v < 0.0) ok = false;
      else r = std::sqrt(v);
      break;
    default: ok = false;
  }
  if (!std::isfinite(r)) ok = false;
  return r;
}

}  // namespace

Expr operator-(const Expr& a) {
  if (a.is_constant()) return Expr::constant(-a.value());
  if (a.op() == Op::Neg) return a.arg(0);
  return Expr::unary(Op::Neg, a);
}

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr::constant(a.value() + b.value());
  if (a.is_constant(0.0)) return b;
  if (b.is_constant(0.0)) return a;
  if (b.op() == Op::Neg) return a - b.arg(0);
  if (a.op() == Op::Neg) return b - a.arg(0);
  if (b.is_constant() && b.value() < 0.0) return a - Expr::constant(-b.value());
  return Expr::binary(Op::Add, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr::constant(a.value() - b.value());
  if (b.is_constant(0.0)) return a;
  if (a.is_constant(0.0)) return -b;
  if (a.id() == b.id()) return Expr::constant(0.0);
  if (b.op() == Op::Neg) return a + b.arg(0);
  if (b.is_constant() && b.value() < 0.0) return a + Expr::constant(-b.value());
  return Expr::binary(Op::Sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr::constant(a.value() * b.value());
  if (a.is_constant(0.0) || b.is_constant(0.0)) return Expr::constant(0.0);
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  if (a.is_constant(-1.0)) return -b;
  if (b.is_constant(-1.0)) return -a;
  if (a.op() == Op::Neg) return -(a.arg(0) * b);
  if (b.op() == Op::Neg) return -(a * b.arg(0));
  if (b.is_constant()) return b * a;
  if (a.is_constant() && b.op() == Op::Mul && b.arg(0).is_constant())
    return Expr::constant(a.value() * b.arg(0).value()) * b.arg(1);
  if (a.id() == b.id()) return pow(a, 2);
  return Expr::binary(Op::Mul, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant() && b.value() != 0.0)
    return Expr::constant(a.value() / b.value());
  if (a.is_constant(0.0)) return Expr::constant(0.0);
  if (b.is_constant(1.0)) return a;
  if (b.is_constant(-1.0)) return -a;
  if (a.op() == Op::Neg) return -(a.arg(0) / b);
  if (b.op() == Op::Neg) return -(a / b.arg(0));
  return Expr::binary(Op::Div, a, b);
}

Expr pow(const Expr& base, int exponent) {
  if (exponent < 0) throw std::invalid_argument("power exponent must be a nonnegative integer");
  if (exponent == 0) return Expr::constant(1.0);
  if (exponent == 1) return base;
  if (base.is_constant()) return Expr::constant(std::pow(base.value(), exponent));
  if (base.op() == Op::Pow) return pow(base.arg(0), base.exponent() * exponent);
  return Expr::power(base, exponent);
}

Expr apply(Op function, const Expr& arg) {
  if (!is_function(function)) throw std::invalid_argument("not a catalog function");
  if (arg.is_constant()) {
    bool ok = false;
    const double r = fold_function(function, arg.value(), ok);
    if (ok) return Expr::constant(r);
  }
  return Expr::unary(function, arg);
}

namespace {

template <typename Rebuild>
Expr rebuild(const Expr& e, std::unordered_map<const void*, Expr>& memo, Rebuild&& leaf) {
  if (auto it = memo.find(e.id()); it != memo.end()) return it->second;
  Expr out;
  switch (e.op()) {
    case Op::Const:
    case Op::Var:
      out = leaf(e);
      break;
    case Op::Neg:
      out = -rebuild(e.arg(0), memo, leaf);
      break;
    case Op::Add:
      out = rebuild(e.arg(0), memo, leaf) + rebuild(e.arg(1), memo, leaf);
      break;
    case Op::Sub:
      out = rebuild(e.arg(0), memo, leaf) - rebuild(e.arg(1), memo, leaf);
      break;
    case Op::Mul:
      out = rebuild(e.arg(0), memo, leaf) * rebuild(e.arg(1), memo, leaf);
      break;
    case Op::Div:
      out = rebuild(e.arg(0), memo, leaf) / rebuild(e.arg(1), memo, leaf);
      break;
    case Op::Pow:
      out = pow(rebuild(e.arg(0), memo, leaf), e.exponent());
      break;
    default:
      out = apply(e.op(), rebuild(e.arg(0), memo, leaf));
  }
  memo.emplace(e.id(), out);
  return out;
}

}  // namespace

Expr simplify(const Expr& e) {
  std::unordered_map<const void*, Expr> memo;
  return rebuild(e, memo, [](const Expr& leaf) { return leaf; });
}

Expr substitute(const Expr& e, std::string_view var, const Expr& replacement) {
  std::unordered_map<const void*, Expr> memo;
  return rebuild(e, memo, [&](const Expr& leaf) {
    return leaf.op() == Op::Var && leaf.name() == var ? replacement : leaf;
  });
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.id() == b.id()) return true;
  if (a.op() != b.op() || a.arity() != b.arity()) return false;
  switch (a.op()) {
    case Op::Const: {
      // Bitwise comparison distinguishes 0 from -0.
      return std::signbit(a.value()) == std::signbit(b.value()) &&
             (a.value() == b.value() || (std::isnan(a.value()) && std::isnan(b.value())));
    }
    case Op::Var:
      return a.name() == b.name();
    case Op::Pow:
      if (a.exponent() != b.exponent()) return false;
      break;
    default:
      break;
  }
  for (std::size_t i = 0; i < a.arity(); ++i)
    if (!structurally_equal(a.arg(i), b.arg(i))) return false;
  return true;
}

namespace {

void visit_unique(const Expr& e, std::unordered_set<const void*>& seen,
                  const std::function<void(const Expr&)>& fn) {
  if (!seen.insert(e.id()).second) return;
  fn(e);
  for (std::size_t i = 0; i < e.arity(); ++i) visit_unique(e.arg(i), seen, fn);
}

bool depends_memo(const Expr& e, std::string_view var,
                  std::unordered_map<const void*, bool>& memo) {
  if (auto it = memo.find(e.id()); it != memo.end()) return it->second;
  bool r = false;
  if (e.op() == Op::Var) {
    r = e.name() == var;
  } else {
    for (std::size_t i = 0; i < e.arity() && !r; ++i) r = depends_memo(e.arg(i), var, memo);
  }
  memo.emplace(e.id(), r);
  return r;
}

}  // namespace

std::set<std::string> free_variables(const Expr& e) {
  std::set<std::string> vars;
  std::unordered_set<const void*> seen;
  visit_unique(e, seen, [&](const Expr& n) {
    if (n.op() == Op::Var) vars.insert(n.name());
  });
  return vars;
}

bool depends_on(const Expr& e, std::string_view var) {
  std::unordered_map<const void*, bool> memo;
  return depends_memo(e, var, memo);
}

std::size_t node_count(const Expr& e) {
  std::unordered_set<const void*> seen;
  visit_unique(e, seen, [](const Expr&) {});
  return seen.size();
}

// ---------------------------------------------------------------------------
// Printing

namespace {

int precedence(const Expr& e) {
  switch (e.op()) {
    case Op::Const: return e.value() < 0.0 || std::signbit(e.value()) ? 3 : 5;
    case Op::Var: return 5;
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    default: return 5;  // function call
  }
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf.data(), ptr);
}

void print(const Expr& e, std::string& out);

void print_wrapped(const Expr& e, bool wrap, std::string& out) {
  if (wrap) out += '(';
  print(e, out);
  if (wrap) out += ')';
}

void print(const Expr& e, std::string& out) {
  switch (e.op()) {
    case Op::Const:
      if (std::signbit(e.value())) {
        out += '-';
        out += format_number(-e.value());
      } else {
        out += format_number(e.value());
      }
      return;
    case Op::Var:
      out += e.name();
      return;
    case Op::Neg:
      out += '-';
      print_wrapped(e.arg(0), precedence(e.arg(0)) < 4, out);
      return;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
      const int p = precedence(e);
      print_wrapped(e.arg(0), precedence(e.arg(0)) < p, out);
      switch (e.op()) {
        case Op::Add: out += " + "; break;
        case Op::Sub: out += " - "; break;
        case Op::Mul: out += "*"; break;
        default: out += "/"; break;
      }
      print_wrapped(e.arg(1), precedence(e.arg(1)) <= p, out);
      return;
    }
    case Op::Pow:
      print_wrapped(e.arg(0), precedence(e.arg(0)) < 5, out);
      out += '^';
      out += std::to_string(e.exponent());
      return;
    default:
      out += function_name(e.op());
      out += '(';
      print(e.arg(0), out);
      out += ')';
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string out;
  print(e, out);
  return out;
}

// ---------------------------------------------------------------------------
// Differentiation

namespace {

class Differentiator {
 public:
  explicit Differentiator(std::string_view var) : var_(var) {}

  Expr operator()(const Expr& e) {
    if (!depends_memo(e, var_, depends_)) return Expr::constant(0.0);
    if (auto it = memo_.find(e.id()); it != memo_.end()) return it->second;
    Expr d = compute(e);
    memo_.emplace(e.id(), d);
    return d;
  }

 private:
  Expr compute(const Expr& e) {
    switch (e.op()) {
      case Op::Const: return Expr::constant(0.0);
      case Op::Var: return Expr::constant(e.name() == var_ ? 1.0 : 0.0);
      case Op::Neg: return -(*this)(e.arg(0));
      case Op::Add: return (*this)(e.arg(0)) + (*this)(e.arg(1));
      case Op::Sub: return (*this)(e.arg(0)) - (*this)(e.arg(1));
      case Op::Mul: {
        const Expr& a = e.arg(0);
        const Expr& b = e.arg(1);
        return (*this)(a) * b + a * (*this)(b);
      }
      case Op::Div: {
        const Expr& a = e.arg(0);
        const Expr& b = e.arg(1);
        const Expr da = (*this)(a);
        const Expr db = (*this)(b);
        if (db.is_constant(0.0)) return da / b;
        return da / b - (a * db) / pow(b, 2);
      }
      case Op::Pow: {
        const Expr& a = e.arg(0);
        const int n = e.exponent();
        if (n == 0) return Expr::constant(0.0);
        return Expr::constant(n) * pow(a, n - 1) * (*this)(a);
      }
      case Op::Sin: return apply(Op::Cos, e.arg(0)) * (*this)(e.arg(0));
      case Op::Cos: return -(apply(Op::Sin, e.arg(0)) * (*this)(e.arg(0)));
      case Op::Tan: return (*this)(e.arg(0)) / pow(apply(Op::Cos, e.arg(0)), 2);
      case Op::Exp: return e * (*this)(e.arg(0));
      case Op::Ln: return (*this)(e.arg(0)) / e.arg(0);
      case Op::Tanh: return (Expr::constant(1.0) - pow(e, 2)) * (*this)(e.arg(0));
      case Op::Sqrt: return (*this)(e.arg(0)) / (Expr::constant(2.0) * e);
    }
    return Expr::constant(0.0);
  }

  std::string_view var_;
  std::unordered_map<const void*, bool> depends_;
  std::unordered_map<const void*, Expr> memo_;
};

}  // namespace

Expr diff(const Expr& e, std::string_view var) {
  Differentiator d(var);
  return d(e);
}

// ---------------------------------------------------------------------------
// Evaluation

DomainError::DomainError(const std::string& what, std::string subexpression)
    : std::runtime_error(what + " in '" + subexpression + "'"),
      subexpression_(std::move(subexpression)) {}

double eval(const Expr& e, const Env& env) {
  std::vector<std::string> vars;
  std::vector<double> values;
  for (const auto& v : free_variables(e)) {
    auto it = env.find(v);
    if (it == env.end()) throw std::invalid_argument("unbound variable '" + v + "'");
    vars.push_back(v);
    values.push_back(it->second);
  }
  return Program(e, std::move(vars)).run1(values);
}

DerivativeChain::DerivativeChain(Expr base, std::string var, int max_order)
    : base_(std::move(base)),
      var_(std::move(var)),
      max_order_(max_order),
      state_(std::make_shared<State>()) {
  state_->chain.push_back(base_);
}

Expr DerivativeChain::derivative(int k) const {
  if (k < 0) throw std::invalid_argument("derivative order must be nonnegative");
  if (k > max_order_)
    throw OrderExceeded("derivative order " + std::to_string(k) + " exceeds cap " +
                        std::to_string(max_order_));
  std::lock_guard lock(state_->mutex);
  auto& chain = state_->chain;
  while (static_cast<int>(chain.size()) <= k) chain.push_back(diff(chain.back(), var_));
  return chain[k];
}

double DerivativeChain::at(int k, double x0) const {
  const Expr d = derivative(k);
  std::shared_ptr<const Program> program;
  {
    std::lock_guard lock(state_->mutex);
    auto& programs = state_->programs;
    if (programs.size() <= static_cast<std::size_t>(k)) programs.resize(k + 1);
    if (!programs[k]) programs[k] = std::make_shared<const Program>(d, std::vector{var_});
    program = programs[k];
  }
  return program->run1(x0);
}

double nth_derivative_at(const Expr& e, std::string_view var, int k, double x0, int max_order) {
  DerivativeChain chain(e, std::string(var), max_order);
  return chain.at(k, x0);
}

}  // namespace obsvlab
