#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nonacc::expr {

using Complex = std::complex<double>;

/// Syntax or semantic error while parsing; offset() is the 1-based character position.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, std::size_t offset);
  std::size_t offset() const { return offset_; }

private:
  std::size_t offset_;
};

/// Division by zero or a non-finite intermediate during evaluation.
class EvalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Kind {
  constant,
  variable,
  neg,
  exp,
  sin,
  cos,
  sqrt,
  add,
  sub,
  mul,
  div,
  pow,
};

struct Node;

/// Immutable complex-valued expression over x1..xd.
///
/// Copies share the underlying tree. A default-constructed Expr is the constant 0.
class Expr {
public:
  Expr();

  static Expr constant(Complex value);
  static Expr variable(int index);
  static Expr unary(Kind op, Expr arg);
  static Expr binary(Kind op, Expr lhs, Expr rhs);
  static Expr power(Expr base, unsigned exponent);

  Kind kind() const;
  Complex value() const;     // constants only
  int variable_index() const;  // variables only, 1-based
  unsigned exponent() const;   // pow only
  const Expr& arg() const;     // unary ops and pow base
  const Expr& lhs() const;
  const Expr& rhs() const;

  bool is_constant(Complex c) const;
  bool is_zero() const { return is_constant(0.0); }
  bool is_one() const { return is_constant(1.0); }
  /// Largest variable index referenced (0 if none).
  int max_variable() const;

  Complex eval(std::span<const double> x) const;
  /// Canonical fully-parenthesized text; parse(str()) reproduces the tree.
  std::string str() const;
  std::uint64_t hash() const;

private:
  friend struct Node;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

bool same_tree(const Expr& a, const Expr& b);

/// Grammar (lowest to highest precedence):
///   sum     := product (('+' | '-') product)*
///   product := unary (('*' | '/') unary)*
///   unary   := ('-' | '+') unary | power
///   power   := atom ('^' unary)?          right-associative, exponent a constant integer >= 0
///   atom    := number | 'i' | 'pi' | 'x'k | fn '(' sum ')' | '(' sum ')'
///   fn      := exp | sin | cos | sqrt
Expr parse(std::string_view text, int dim);

/// Exact partial derivative with respect to x_var (1-based). Only 0/1 folding is applied.
Expr differentiate(const Expr& e, int var);

// Builders with 0/1 folding.
Expr make_add(const Expr& a, const Expr& b);
Expr make_sub(const Expr& a, const Expr& b);
Expr make_mul(const Expr& a, const Expr& b);
Expr make_div(const Expr& a, const Expr& b);
Expr make_neg(const Expr& a);
Expr make_pow(const Expr& a, unsigned n);

}  // namespace nonacc::expr
