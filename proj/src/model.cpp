#include "obsvlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "obsvlab/program.hpp"

namespace obsvlab {

namespace {

std::string join_violations(const std::vector<Violation>& vs) {
  std::string s = "invalid system:";
  for (const auto& v : vs) s += " [" + v.message + "]";
  return s;
}

}  // namespace

ValidationError::ValidationError(std::vector<Violation> violations)
    : std::runtime_error(join_violations(violations)), violations_(std::move(violations)) {}

std::vector<std::string> x_names(int n) {
  std::vector<std::string> names;
  for (int i = 1; i <= n; ++i) names.push_back("x" + std::to_string(i));
  return names;
}

std::vector<std::string> z_names(int n) {
  std::vector<std::string> names;
  for (int i = 1; i <= n; ++i) names.push_back("z" + std::to_string(i));
  return names;
}

std::vector<std::string> cascade_state_names(int n) {
  auto names = x_names(n);
  auto z = z_names(n);
  names.insert(names.end(), z.begin(), z.end());
  return names;
}

std::vector<Violation> validate(const CascadeSystem& sys) {
  std::vector<Violation> out;
  if (sys.n <= 0) {
    out.push_back({0, "n = " + std::to_string(sys.n) + " is not positive"});
    return out;
  }
  const auto n = static_cast<std::size_t>(sys.n);
  if (sys.gamma.size() != n)
    out.push_back({0, "expected " + std::to_string(n) + " gamma entries, got " +
                          std::to_string(sys.gamma.size())});
  if (sys.drift.size() != n)
    out.push_back({0, "expected " + std::to_string(n) + " F entries, got " +
                          std::to_string(sys.drift.size())});
  if (sys.b.size() != n)
    out.push_back({0, "expected " + std::to_string(n) + " b entries, got " +
                          std::to_string(sys.b.size())});

  for (std::size_t i = 0; i < sys.gamma.size(); ++i) {
    for (const auto& v : free_variables(sys.gamma[i])) {
      if (v != "x") {
        out.push_back({static_cast<int>(i + 1),
                       "gamma_" + std::to_string(i + 1) + " uses non-x variable '" + v + "'"});
        break;
      }
    }
  }
  const auto zs = z_names(sys.n);
  const std::set<std::string> zset(zs.begin(), zs.end());
  for (std::size_t i = 0; i < sys.drift.size(); ++i) {
    for (const auto& v : free_variables(sys.drift[i])) {
      if (zset.count(v) == 0) {
        out.push_back({static_cast<int>(i + 1),
                       "F_" + std::to_string(i + 1) + " uses non-z variable '" + v + "'"});
        break;
      }
    }
  }
  for (std::size_t i = 0; i < sys.b.size(); ++i) {
    if (sys.b[i] == 0.0)
      out.push_back({static_cast<int>(i + 1), "b_" + std::to_string(i + 1) + " = 0"});
    else if (!std::isfinite(sys.b[i]))
      out.push_back({static_cast<int>(i + 1), "b_" + std::to_string(i + 1) + " is not finite"});
  }
  return out;
}

void check_consistent(const ControlAffineSystem& sys) {
  const std::set<std::string> names(sys.state.begin(), sys.state.end());
  if (names.size() != sys.state.size()) throw std::invalid_argument("duplicate state variable");
  auto check = [&](const Expr& e, const std::string& what) {
    for (const auto& v : free_variables(e))
      if (names.count(v) == 0)
        throw std::invalid_argument(what + " uses undeclared variable '" + v + "'");
  };
  if (sys.drift.size() != sys.dim()) throw std::invalid_argument("drift length mismatch");
  for (const auto& e : sys.drift) check(e, "drift");
  for (const auto& field : sys.inputs) {
    if (field.size() != sys.dim()) throw std::invalid_argument("input field length mismatch");
    for (const auto& e : field) check(e, "input field");
  }
  for (const auto& h : sys.outputs) check(h, "output");
}

ControlAffineSystem as_control_affine(const CascadeSystem& sys) {
  if (auto v = validate(sys); !v.empty()) throw ValidationError(std::move(v));
  const auto xs = x_names(sys.n);
  const auto zs = z_names(sys.n);

  ControlAffineSystem out;
  out.state = cascade_state_names(sys.n);
  std::vector<Expr> input(2 * sys.n, Expr::constant(0.0));
  for (int i = 0; i < sys.n; ++i) {
    out.drift.push_back(Expr::variable(zs[i]));
    input[sys.n + i] = Expr::constant(sys.b[i]);
  }
  for (int i = 0; i < sys.n; ++i) out.drift.push_back(sys.drift[i]);
  out.inputs.push_back(std::move(input));
  for (int i = 0; i < sys.n; ++i) {
    const Expr gamma_i = substitute(sys.gamma[i], "x", Expr::variable(xs[i]));
    out.outputs.push_back(gamma_i * Expr::variable(zs[i]));
  }
  return out;
}

std::vector<std::vector<Expr>> jacobian(const std::vector<Expr>& fields,
                                        const std::vector<std::string>& vars) {
  std::vector<std::vector<Expr>> J(fields.size());
  for (std::size_t r = 0; r < fields.size(); ++r)
    for (const auto& v : vars) J[r].push_back(diff(fields[r], v));
  return J;
}

namespace {

Eigen::MatrixXd evaluate_matrix(const std::vector<std::vector<Expr>>& M,
                                const std::vector<std::string>& vars, const Eigen::VectorXd& at,
                                std::size_t cols) {
  std::vector<Expr> flat;
  for (const auto& row : M) flat.insert(flat.end(), row.begin(), row.end());
  Eigen::MatrixXd out(M.size(), cols);
  if (flat.empty()) return out;
  Program program(flat, vars);
  std::vector<double> values(flat.size());
  program.run(std::span<const double>(at.data(), at.size()), values);
  for (std::size_t r = 0; r < M.size(); ++r)
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = values[r * cols + c];
  return out;
}

}  // namespace

LinearizationResult linearize_at(const ControlAffineSystem& sys, const Eigen::VectorXd& x0) {
  check_consistent(sys);
  if (static_cast<std::size_t>(x0.size()) != sys.dim())
    throw std::invalid_argument("state dimension mismatch");
  const std::size_t d = sys.dim();
  LinearizationResult r;
  r.point = x0;
  r.A = evaluate_matrix(jacobian(sys.drift, sys.state), sys.state, x0, d);
  std::vector<std::vector<Expr>> Bt;
  for (const auto& field : sys.inputs) Bt.push_back(field);
  r.B = evaluate_matrix(Bt, sys.state, x0, d).transpose();
  if (sys.inputs.empty()) r.B.resize(d, 0);
  r.C = evaluate_matrix(jacobian(sys.outputs, sys.state), sys.state, x0, d);
  return r;
}

Eigen::MatrixXd observability_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C) {
  const Eigen::Index d = A.rows();
  Eigen::MatrixXd O(C.rows() * d, d);
  Eigen::MatrixXd block = C;
  for (Eigen::Index k = 0; k < d; ++k) {
    O.middleRows(k * C.rows(), C.rows()) = block;
    block = block * A;
  }
  return O;
}

int numerical_rank(const Eigen::MatrixXd& M, double rel_tol) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * s(0)) ++rank;
  return rank;
}

// ---------------------------------------------------------------------------
// Presets

const std::vector<PresetInfo>& preset_catalog() {
  static const std::vector<PresetInfo> catalog = {
      {"fish-1d-gauss",
       "one-dimensional station keeping, z' = -z + u, high-pass sensing of a Gaussian "
       "stimulus profile: gamma = exp(-x^2)"},
      {"fish-1d-hyperbolic",
       "one-dimensional station keeping with the degenerate hyperbolic sensor gamma = "
       "1/(x+2), locally unobservable at every state"},
      {"periodic-sin",
       "one-dimensional station keeping with periodic sensor gamma = sin(x); shifting x by "
       "2*pi is invisible to the output"},
      {"fish-1d-tilted",
       "one-dimensional station keeping with aperiodic sensor gamma = 2 + sin(x) + 0.1*x"},
      {"offset-sin", "one-dimensional station keeping with periodic sensor gamma = 2 + sin(x)"},
      {"pair-gauss-sin",
       "two decoupled sensor channels, gamma = (exp(-x^2), sin(x)); the second channel is "
       "periodic so the pair is not observable"},
  };
  return catalog;
}

CascadeSystem simple_system(const std::string& gamma, const std::string& drift, double b) {
  CascadeSystem s;
  s.n = 1;
  s.gamma = {parse(gamma, {"x"})};
  s.drift = {parse(drift, {"z1"})};
  s.b = {b};
  return s;
}

CascadeSystem preset(const std::string& name) {
  CascadeSystem s;
  if (name == "fish-1d-gauss") {
    s = simple_system("exp(-x^2)");
  } else if (name == "fish-1d-hyperbolic") {
    s = simple_system("1/(x+2)");
  } else if (name == "periodic-sin") {
    s = simple_system("sin(x)");
  } else if (name == "fish-1d-tilted") {
    s = simple_system("2 + sin(x) + 0.1*x");
  } else if (name == "offset-sin") {
    s = simple_system("2 + sin(x)");
  } else if (name == "pair-gauss-sin") {
    s.n = 2;
    s.gamma = {parse("exp(-x^2)", {"x"}), parse("sin(x)", {"x"})};
    s.drift = {parse("-z1", {"z1", "z2"}), parse("-z2", {"z1", "z2"})};
    s.b = {1.0, 1.0};
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  for (const auto& p : preset_catalog())
    if (p.name == name) s.description = p.description;
  return s;
}

}  // namespace obsvlab
