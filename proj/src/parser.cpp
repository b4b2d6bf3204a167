#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

#include "obsvlab/expr.hpp"

namespace obsvlab {

const std::set<std::string> kNoVariables{};

ParseError::ParseError(std::size_t offset, std::string expected, std::string found)
    : std::runtime_error("parse error at offset " + std::to_string(offset) + ": expected " +
                         expected + ", found " + found),
      offset_(offset),
      expected_(std::move(expected)),
      found_(std::move(found)) {}

namespace {

struct CatalogEntry {
  std::string_view name;
  Op op;
};

constexpr CatalogEntry kCatalog[] = {
    {"sin", Op::Sin}, {"cos", Op::Cos},   {"tan", Op::Tan},   {"exp", Op::Exp},
    {"ln", Op::Ln},   {"tanh", Op::Tanh}, {"sqrt", Op::Sqrt},
};

constexpr std::string_view kCatalogDescription =
    "analytic function (sin, cos, tan, exp, ln, tanh, sqrt)";

class Parser {
 public:
  Parser(std::string_view src, const std::set<std::string>& vars) : src_(src), vars_(vars) {}

  Expr parse_all() {
    Expr e = parse_expr();
    skip_ws();
    if (pos_ != src_.size()) fail("operator or end of input");
    return e;
  }

 private:
  [[noreturn]] void fail(std::string expected) const { fail_at(pos_, std::move(expected)); }

  [[noreturn]] void fail_at(std::size_t at, std::string expected) const {
    throw ParseError(at, std::move(expected), token_text(at));
  }

  std::string token_text(std::size_t at) const {
    if (at >= src_.size()) return "end of input";
    const auto c = static_cast<unsigned char>(src_[at]);
    std::size_t end = at + 1;
    if (std::isalnum(c) || c == '_' || c == '.') {
      while (end < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[end])) || src_[end] == '_' ||
              src_[end] == '.'))
        ++end;
    }
    return "'" + std::string(src_.substr(at, end - at)) + "'";
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr parse_expr() {
    Expr lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = Expr::binary(Op::Add, lhs, parse_term());
      } else if (accept('-')) {
        lhs = Expr::binary(Op::Sub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_term() {
    Expr lhs = parse_factor();
    for (;;) {
      if (accept('*')) {
        lhs = Expr::binary(Op::Mul, lhs, parse_factor());
      } else if (accept('/')) {
        lhs = Expr::binary(Op::Div, lhs, parse_factor());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_factor() {
    const bool negate = accept('-');
    Expr base = parse_atom();
    if (accept('^')) base = Expr::power(base, parse_integer());
    return negate ? Expr::unary(Op::Neg, base) : base;
  }

  int parse_integer() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (start == pos_) fail("nonnegative integer exponent");
    int value = 0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, value);
    if (ec != std::errc() || ptr != src_.data() + pos_) fail_at(start, "exponent within int range");
    return value;
  }

  Expr parse_atom() {
    skip_ws();
    if (pos_ >= src_.size()) fail("number, identifier or '('");
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    if (c == '(') {
      ++pos_;
      Expr inner = parse_expr();
      if (!accept(')')) fail("')'");
      return inner;
    }
    fail("number, identifier or '('");
  }

  Expr parse_number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      const std::size_t from = pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      return pos_ - from;
    };
    std::size_t n = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      n += digits();
    }
    if (n == 0) fail_at(start, "number");
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
      if (look < src_.size() && std::isdigit(static_cast<unsigned char>(src_[look]))) {
        pos_ = look;
        digits();
      }
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, value);
    if (ec != std::errc() || ptr != src_.data() + pos_ || !std::isfinite(value))
      fail_at(start, "finite decimal number");
    return Expr::constant(value);
  }

  Expr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    const std::string_view ident = src_.substr(start, pos_ - start);

    std::size_t look = pos_;
    while (look < src_.size() && std::isspace(static_cast<unsigned char>(src_[look]))) ++look;
    if (look < src_.size() && src_[look] == '(') {
      for (const auto& entry : kCatalog) {
        if (entry.name == ident) {
          pos_ = look + 1;
          Expr arg = parse_expr();
          if (!accept(')')) fail("')'");
          return Expr::unary(entry.op, arg);
        }
      }
      fail_at(start, std::string(kCatalogDescription));
    }

    if (ident == "pi") return Expr::constant(std::numbers::pi);
    if (ident == "e") return Expr::constant(std::numbers::e);
    if (vars_.count(std::string(ident)) == 0) {
      std::string expected = "declared variable";
      if (!vars_.empty()) {
        expected += " (";
        bool first = true;
        for (const auto& v : vars_) {
          if (!first) expected += ", ";
          expected += v;
          first = false;
        }
        expected += ")";
      }
      fail_at(start, expected);
    }
    return Expr::variable(std::string(ident));
  }

  std::string_view src_;
  const std::set<std::string>& vars_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view source, const std::set<std::string>& allowed_vars) {
  return Parser(source, allowed_vars).parse_all();
}

}  // namespace obsvlab
