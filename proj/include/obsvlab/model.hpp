#pragma once

// System descriptions.
//
// A CascadeSystem is the 2n-dimensional single-input class
//     x' = z,   z' = F(z) + b u,   y_i = gamma_i(x_i) z_i
// with every b_i nonzero. A ControlAffineSystem is the general form
//     s' = g0(s) + sum_i g_i(s) u_i,   y_j = h_j(s).
// State vectors are always ordered (x_1..x_n, z_1..z_n).

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "obsvlab/expr.hpp"

namespace obsvlab {

struct CascadeSystem {
  int n = 0;
  std::vector<Expr> gamma;  // each in the single variable "x"
  std::vector<Expr> drift;  // F_i over z1..zn
  std::vector<double> b;
  std::string description;
};

struct Violation {
  int index;  // 1-based component index, 0 for system-wide problems
  std::string message;
};

std::vector<Violation> validate(const CascadeSystem& sys);

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

std::vector<std::string> x_names(int n);
std::vector<std::string> z_names(int n);
std::vector<std::string> cascade_state_names(int n);

struct ControlAffineSystem {
  std::vector<std::string> state;          // variable names, in state order
  std::vector<Expr> drift;                 // g0, one entry per state
  std::vector<std::vector<Expr>> inputs;   // g1..gm
  std::vector<Expr> outputs;               // h1..hp

  std::size_t dim() const { return state.size(); }
  std::size_t num_inputs() const { return inputs.size(); }
  std::size_t num_outputs() const { return outputs.size(); }
};

// Throws std::invalid_argument if a field or output uses an undeclared variable
// or field lengths disagree with the state dimension.
void check_consistent(const ControlAffineSystem& sys);

// Throws ValidationError if `sys` is invalid.
ControlAffineSystem as_control_affine(const CascadeSystem& sys);

struct LinearizationResult {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;
  Eigen::VectorXd point;
};

LinearizationResult linearize_at(const ControlAffineSystem& sys, const Eigen::VectorXd& x0);

// [C; CA; ...; CA^(d-1)]
Eigen::MatrixXd observability_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C);

// Number of singular values above rel_tol * sigma_max.
int numerical_rank(const Eigen::MatrixXd& M, double rel_tol = 1e-10);

// Symbolic Jacobian of `fields` with respect to `vars`.
std::vector<std::vector<Expr>> jacobian(const std::vector<Expr>& fields,
                                        const std::vector<std::string>& vars);

struct PresetInfo {
  std::string name;
  std::string description;
};

const std::vector<PresetInfo>& preset_catalog();
// Throws std::invalid_argument for unknown names.
CascadeSystem preset(const std::string& name);

// Single-sensor system x' = z, z' = F(z) + b u with the given sensor function.
CascadeSystem simple_system(const std::string& gamma, const std::string& drift = "-z1",
                            double b = 1.0);

// ---------------------------------------------------------------------------
// System files: UTF-8, one `key = value` per line, '#' starts a comment.
//   n = <int>
//   gamma[i] = <expr in x>
//   F[i] = <expr in z1..zn>
//   b = [v1, ..., vn]

class SystemFileError : public std::runtime_error {
 public:
  SystemFileError(int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

// Expression parse errors are reported as SystemFileError carrying the line
// and the ParseError message (with its offset into the expression text).
CascadeSystem parse_system_file(std::string_view text);
CascadeSystem load_system_file(const std::string& path);
std::string format_system_file(const CascadeSystem& sys);

}  // namespace obsvlab
