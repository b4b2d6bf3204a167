#include "obsvlab/program.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

namespace obsvlab {

namespace {

using Key = std::tuple<int, std::uint64_t, int, int, int>;

class Compiler {
 public:
  Compiler(const std::vector<std::string>& vars, std::vector<Expr>& source)
      : vars_(vars), source_(source) {}

  template <typename Emit>
  int lower(const Expr& e, Emit&& emit) {
    if (auto it = by_node_.find(e.id()); it != by_node_.end()) return it->second;
    int a = -1;
    int b = -1;
    int exponent = 0;
    double value = 0.0;
    switch (e.op()) {
      case Op::Const:
        value = e.value();
        break;
      case Op::Var: {
        auto it = std::find(vars_.begin(), vars_.end(), e.name());
        if (it == vars_.end())
          throw std::invalid_argument("unbound variable '" + e.name() + "'");
        a = static_cast<int>(it - vars_.begin());
        break;
      }
      default:
        a = lower(e.arg(0), emit);
        if (e.arity() > 1) b = lower(e.arg(1), emit);
        if (e.op() == Op::Pow) exponent = e.exponent();
    }
    const Key key{static_cast<int>(e.op()), std::bit_cast<std::uint64_t>(value), a, b, exponent};
    int slot;
    if (auto it = by_key_.find(key); it != by_key_.end()) {
      slot = it->second;
    } else {
      slot = emit(e.op(), a, b, exponent, value);
      source_.push_back(e);
      by_key_.emplace(key, slot);
    }
    by_node_.emplace(e.id(), slot);
    return slot;
  }

 private:
  const std::vector<std::string>& vars_;
  std::vector<Expr>& source_;
  std::unordered_map<const void*, int> by_node_;
  std::map<Key, int> by_key_;
};

std::string describe(const Expr& e) {
  std::string s = to_string(e);
  if (s.size() > 160) s = s.substr(0, 157) + "...";
  return s;
}

}  // namespace

Program::Program(std::span<const Expr> roots, std::vector<std::string> vars)
    : vars_(std::move(vars)) {
  Compiler compiler(vars_, source_);
  auto emit = [this](Op op, int a, int b, int exponent, double value) {
    code_.push_back(Instr{op, a, b, exponent, value});
    return static_cast<int>(code_.size() - 1);
  };
  for (const auto& r : roots) roots_.push_back(compiler.lower(r, emit));
}

Program::Program(const Expr& root, std::vector<std::string> vars)
    : Program(std::span<const Expr>(&root, 1), std::move(vars)) {}

void Program::execute(std::span<const double> inputs, std::vector<double>& slots) const {
  if (inputs.size() != vars_.size())
    throw std::invalid_argument("program expects " + std::to_string(vars_.size()) + " inputs");
  slots.resize(code_.size());
  for (std::size_t i = 0; i < code_.size(); ++i) {
    const Instr& in = code_[i];
    const double x = in.a >= 0 && in.op != Op::Var ? slots[in.a] : 0.0;
    const double y = in.b >= 0 ? slots[in.b] : 0.0;
    double r = 0.0;
    switch (in.op) {
      case Op::Const: r = in.value; break;
      case Op::Var: r = inputs[in.a]; break;
      case Op::Neg: r = -x; break;
      case Op::Add: r = x + y; break;
      case Op::Sub: r = x - y; break;
      case Op::Mul: r = x * y; break;
      case Op::Div:
        if (y == 0.0) throw DomainError("division by zero", describe(source_[i]));
        r = x / y;
        break;
      case Op::Pow: {
        r = 1.0;
        double base = x;
        for (int n = in.exponent; n > 0; n >>= 1) {
          if (n & 1) r *= base;
          base *= base;
        }
        break;
      }
      case Op::Sin: r = std::sin(x); break;
      case Op::Cos: r = std::cos(x); break;
      case Op::Tan: r = std::tan(x); break;
      case Op::Exp: r = std::exp(x); break;
      case Op::Ln:
        if (x <= 0.0) throw DomainError("logarithm of nonpositive value", describe(source_[i]));
        r = std::log(x);
        break;
      case Op::Tanh: r = std::tanh(x); break;
      case Op::Sqrt:
        if (x < 0.0) throw DomainError("square root of negative value", describe(source_[i]));
        r = std::sqrt(x);
        break;
    }
    if (!std::isfinite(r)) throw DomainError("non-finite value", describe(source_[i]));
    slots[i] = r;
  }
}

void Program::run(std::span<const double> inputs, std::span<double> outputs) const {
  if (outputs.size() != roots_.size())
    throw std::invalid_argument("program produces " + std::to_string(roots_.size()) + " outputs");
  thread_local std::vector<double> slots;
  execute(inputs, slots);
  for (std::size_t i = 0; i < roots_.size(); ++i) outputs[i] = slots[roots_[i]];
}

double Program::run1(std::span<const double> inputs) const {
  if (roots_.empty()) throw std::logic_error("program has no outputs");
  thread_local std::vector<double> slots;
  execute(inputs, slots);
  return slots[roots_[0]];
}

}  // namespace obsvlab
