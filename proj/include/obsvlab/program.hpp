#pragma once

// Flat, common-subexpression-eliminated evaluation of one or more Expr roots
// over a fixed ordering of variables. Used in every hot loop (integration,
// sampling, gradient stacks) instead of tree walking.

#include <span>
#include <string>
#include <vector>

#include "obsvlab/expr.hpp"

namespace obsvlab {

class Program {
 public:
  Program() = default;
  // Throws std::invalid_argument if a root uses a variable not in `vars`.
  Program(std::span<const Expr> roots, std::vector<std::string> vars);
  Program(const Expr& root, std::vector<std::string> vars);

  std::size_t num_inputs() const { return vars_.size(); }
  std::size_t num_outputs() const { return roots_.size(); }
  std::size_t size() const { return code_.size(); }
  const std::vector<std::string>& variables() const { return vars_; }

  // Throws DomainError on invalid arguments or non-finite intermediate values.
  void run(std::span<const double> inputs, std::span<double> outputs) const;
  double run1(std::span<const double> inputs) const;
  double run1(double input) const { return run1(std::span<const double>(&input, 1)); }

 private:
  struct Instr {
    Op op;
    int a = -1;
    int b = -1;
    int exponent = 0;
    double value = 0.0;
  };

  void execute(std::span<const double> inputs, std::vector<double>& slots) const;

  std::vector<std::string> vars_;
  std::vector<Instr> code_;
  std::vector<Expr> source_;
  std::vector<int> roots_;
};

}  // namespace obsvlab
