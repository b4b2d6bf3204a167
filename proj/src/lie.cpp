#include "obsvlab/lie.hpp"

#include <mutex>

#include "obsvlab/program.hpp"

namespace obsvlab {

std::string to_string(const ObservableWord& w) {
  std::string s = "j=" + std::to_string(w.output + 1) + "; mu=[";
  for (std::size_t i = 0; i < w.mu.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(w.mu[i]);
  }
  return s + "]";
}

ObservableWord lflg_word(int output, int k) {
  ObservableWord w{output, {}};
  for (int i = 0; i < k; ++i) {
    w.mu.push_back(1);
    w.mu.push_back(0);
  }
  return w;
}

ObservableWord lglflg_word(int output, int k) {
  ObservableWord w = lflg_word(output, k);
  w.mu.push_back(1);
  return w;
}

Expr lie_derivative(const Expr& alpha, const std::vector<Expr>& field,
                    const std::vector<std::string>& vars) {
  if (field.size() != vars.size())
    throw std::invalid_argument("vector field has " + std::to_string(field.size()) +
                                " components for " + std::to_string(vars.size()) + " variables");
  Expr sum = Expr::constant(0.0);
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (field[i].is_constant(0.0)) continue;
    sum = sum + diff(alpha, vars[i]) * field[i];
  }
  return sum;
}

namespace {

void check_word(const ControlAffineSystem& sys, const ObservableWord& w, int max_length) {
  if (static_cast<int>(w.mu.size()) > max_length)
    throw WordTooLong("word length " + std::to_string(w.mu.size()) + " exceeds cap " +
                      std::to_string(max_length));
  if (w.output < 0 || static_cast<std::size_t>(w.output) >= sys.num_outputs())
    throw std::out_of_range("output index out of range");
  for (int f : w.mu)
    if (f < 0 || static_cast<std::size_t>(f) > sys.num_inputs())
      throw std::out_of_range("field index " + std::to_string(f) + " out of range");
}

const std::vector<Expr>& field_of(const ControlAffineSystem& sys, int index) {
  return index == 0 ? sys.drift : sys.inputs[index - 1];
}

}  // namespace

ObservableCache::ObservableCache(ControlAffineSystem sys, int max_length)
    : sys_(std::move(sys)), max_length_(max_length) {
  check_consistent(sys_);
}

const std::vector<Expr>& ObservableCache::field(int index) const { return field_of(sys_, index); }

Expr ObservableCache::observable(const ObservableWord& w) const {
  check_word(sys_, w, max_length_);
  return lookup_or_build(w);
}

Expr ObservableCache::lookup_or_build(const ObservableWord& w) const {
  {
    std::shared_lock lock(mutex_);
    if (auto it = cache_.find(w); it != cache_.end()) return it->second;
  }
  Expr result;
  if (w.mu.empty()) {
    result = sys_.outputs[w.output];
  } else {
    ObservableWord prefix{w.output, std::vector<int>(w.mu.begin(), w.mu.end() - 1)};
    result = lie_derivative(lookup_or_build(prefix), field(w.mu.back()), sys_.state);
  }
  std::unique_lock lock(mutex_);
  return cache_.emplace(w, result).first->second;
}

double ObservableCache::evaluate(const ObservableWord& w, std::span<const double> state) const {
  return Program(observable(w), sys_.state).run1(state);
}

std::size_t ObservableCache::size() const {
  std::shared_lock lock(mutex_);
  return cache_.size();
}

Expr iterated_observable(const ControlAffineSystem& sys, const ObservableWord& w,
                         int max_length) {
  check_consistent(sys);
  check_word(sys, w, max_length);
  Expr alpha = sys.outputs[w.output];
  for (int f : w.mu) alpha = lie_derivative(alpha, field_of(sys, f), sys.state);
  return alpha;
}

double nested_lie_along_affine(const ControlAffineSystem& sys,
                               const std::vector<std::vector<double>>& u_seq, int output,
                               std::span<const double> state, int max_length) {
  check_consistent(sys);
  if (static_cast<int>(u_seq.size()) > max_length)
    throw WordTooLong("sequence length " + std::to_string(u_seq.size()) + " exceeds cap " +
                      std::to_string(max_length));
  if (output < 0 || static_cast<std::size_t>(output) >= sys.num_outputs())
    throw std::out_of_range("output index out of range");
  if (state.size() != sys.dim()) throw std::invalid_argument("state dimension mismatch");

  Expr alpha = sys.outputs[output];
  for (auto it = u_seq.rbegin(); it != u_seq.rend(); ++it) {
    if (it->size() != sys.num_inputs())
      throw std::invalid_argument("each input vector needs one value per input field");
    std::vector<Expr> X = sys.drift;
    for (std::size_t i = 0; i < sys.num_inputs(); ++i)
      for (std::size_t c = 0; c < sys.dim(); ++c)
        X[c] = X[c] + Expr::constant((*it)[i]) * sys.inputs[i][c];
    alpha = lie_derivative(alpha, X, sys.state);
  }
  return Program(alpha, sys.state).run1(state);
}

double nested_lie_along_affine(const ControlAffineSystem& sys, const std::vector<double>& u_seq,
                               int output, std::span<const double> state, int max_length) {
  if (sys.num_inputs() != 1) throw std::invalid_argument("system is not single-input");
  std::vector<std::vector<double>> seq;
  for (double u : u_seq) seq.push_back({u});
  return nested_lie_along_affine(sys, seq, output, state, max_length);
}

std::vector<std::vector<int>> words_of_length(int length, int num_inputs) {
  std::vector<std::vector<int>> out{{}};
  for (int l = 0; l < length; ++l) {
    std::vector<std::vector<int>> next;
    for (const auto& w : out) {
      for (int f = 0; f <= num_inputs; ++f) {
        auto v = w;
        v.push_back(f);
        next.push_back(std::move(v));
      }
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace obsvlab
