#pragma once

// Lie derivatives along symbolic vector fields and the infinitesimal
// observables L_mu h_j of a control-affine system.
//
// Word convention: mu is stored in application order, innermost first.
// mu = {1, 0} means "differentiate h_j along g1, then along g0", i.e.
// L_g0(L_g1 h_j). Field index 0 is the drift, i >= 1 the i-th input field.

#include <cstdint>
#include <map>
#include <shared_mutex>
#include <string>
#include <vector>

#include "obsvlab/expr.hpp"
#include "obsvlab/model.hpp"

namespace obsvlab {

inline constexpr int kDefaultMaxWordLength = 8;

struct ObservableWord {
  int output = 0;        // 0-based output index
  std::vector<int> mu;   // application order, innermost first

  auto operator<=>(const ObservableWord&) const = default;
};

// "j=1; mu=[1,0]" with a 1-based output index.
std::string to_string(const ObservableWord& w);

// Words for the closed-form families: (L_f L_g)^k h_i and L_g (L_f L_g)^k h_i.
ObservableWord lflg_word(int output, int k);
ObservableWord lglflg_word(int output, int k);

class WordTooLong : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// sum_i d(alpha)/d(vars[i]) * field[i], simplified.
Expr lie_derivative(const Expr& alpha, const std::vector<Expr>& field,
                    const std::vector<std::string>& vars);

// Memoized iterated observables for one system. Concurrent readers share the
// cache; insertion takes an exclusive lock.
class ObservableCache {
 public:
  explicit ObservableCache(ControlAffineSystem sys, int max_length = kDefaultMaxWordLength);

  const ControlAffineSystem& system() const { return sys_; }
  int max_length() const { return max_length_; }

  // Throws WordTooLong, or std::out_of_range for bad indices.
  Expr observable(const ObservableWord& w) const;
  double evaluate(const ObservableWord& w, std::span<const double> state) const;

  std::size_t size() const;

 private:
  const std::vector<Expr>& field(int index) const;
  Expr lookup_or_build(const ObservableWord& w) const;

  ControlAffineSystem sys_;
  int max_length_;
  mutable std::shared_mutex mutex_;
  mutable std::map<ObservableWord, Expr> cache_;
};

// Fresh, unmemoized computation of L_mu h_j.
Expr iterated_observable(const ControlAffineSystem& sys, const ObservableWord& w,
                         int max_length = kDefaultMaxWordLength);

// L_{X_1} L_{X_2} ... L_{X_k} h_j at `state`, where X_l = g0 + sum_i u_seq[l-1][i] g_i.
// X_k is applied first. Each inner vector holds one value per input field.
double nested_lie_along_affine(const ControlAffineSystem& sys,
                               const std::vector<std::vector<double>>& u_seq, int output,
                               std::span<const double> state,
                               int max_length = kDefaultMaxWordLength);

// Single-input convenience overload.
double nested_lie_along_affine(const ControlAffineSystem& sys, const std::vector<double>& u_seq,
                               int output, std::span<const double> state,
                               int max_length = kDefaultMaxWordLength);

// Words of exactly `length`, lexicographic with drift (0) before inputs.
std::vector<std::vector<int>> words_of_length(int length, int num_inputs);

}  // namespace obsvlab
