#include "nonacc/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <numbers>
#include <vector>

namespace nonacc::expr {

struct Node {
  Kind kind = Kind::constant;
  Complex value{0.0, 0.0};
  int var = 0;
  unsigned exponent = 0;
  // Children start empty; the shared zero node would otherwise recurse into itself.
  Expr a{nullptr};
  Expr b{nullptr};
};

ParseError::ParseError(const std::string& what, std::size_t offset)
    : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}

namespace {

std::shared_ptr<const Node> zero_node() {
  static const auto z = std::make_shared<const Node>();
  return z;
}

bool is_unary(Kind k) {
  return k == Kind::neg || k == Kind::exp || k == Kind::sin || k == Kind::cos || k == Kind::sqrt;
}

bool is_binary(Kind k) {
  return k == Kind::add || k == Kind::sub || k == Kind::mul || k == Kind::div;
}

const char* function_name(Kind k) {
  switch (k) {
    case Kind::exp: return "exp";
    case Kind::sin: return "sin";
    case Kind::cos: return "cos";
    case Kind::sqrt: return "sqrt";
    default: return "?";
  }
}

char operator_symbol(Kind k) {
  switch (k) {
    case Kind::add: return '+';
    case Kind::sub: return '-';
    case Kind::mul: return '*';
    case Kind::div: return '/';
    default: return '?';
  }
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write(std::string& out, const Expr& e) {
  switch (e.kind()) {
    case Kind::constant: {
      const Complex c = e.value();
      if (c.imag() == 0.0) {
        if (std::signbit(c.real())) {
          out += "(-" + format_double(-c.real()) + ")";
        } else {
          out += format_double(c.real());
        }
      } else if (c.real() == 0.0 && c.imag() == 1.0) {
        out += "i";
      } else {
        out += "(" + format_double(c.real()) + " + " + format_double(c.imag()) + " * i)";
      }
      return;
    }
    case Kind::variable:
      out += "x" + std::to_string(e.variable_index());
      return;
    case Kind::neg:
      out += "(-";
      write(out, e.arg());
      out += ")";
      return;
    case Kind::exp:
    case Kind::sin:
    case Kind::cos:
    case Kind::sqrt:
      out += function_name(e.kind());
      out += "(";
      write(out, e.arg());
      out += ")";
      return;
    case Kind::pow:
      out += "(";
      write(out, e.arg());
      out += ")^" + std::to_string(e.exponent());
      return;
    default:
      out += "(";
      write(out, e.lhs());
      out += ' ';
      out += operator_symbol(e.kind());
      out += ' ';
      write(out, e.rhs());
      out += ")";
      return;
  }
}

Complex ipow(Complex base, unsigned n) {
  Complex result(1.0, 0.0);
  while (n > 0) {
    if (n & 1u) result *= base;
    n >>= 1u;
    if (n > 0) base *= base;
  }
  return result;
}

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

Complex eval_node(const Expr& e, std::span<const double> x) {
  Complex r;
  switch (e.kind()) {
    case Kind::constant:
      return e.value();
    case Kind::variable: {
      const auto k = static_cast<std::size_t>(e.variable_index());
      if (k > x.size()) {
        throw EvalError("variable x" + std::to_string(k) + " outside a point of dimension " +
                        std::to_string(x.size()));
      }
      return {x[k - 1], 0.0};
    }
    case Kind::neg: r = -eval_node(e.arg(), x); break;
    case Kind::exp: r = std::exp(eval_node(e.arg(), x)); break;
    case Kind::sin: r = std::sin(eval_node(e.arg(), x)); break;
    case Kind::cos: r = std::cos(eval_node(e.arg(), x)); break;
    case Kind::sqrt: r = std::sqrt(eval_node(e.arg(), x)); break;
    case Kind::pow: r = ipow(eval_node(e.arg(), x), e.exponent()); break;
    case Kind::add: r = eval_node(e.lhs(), x) + eval_node(e.rhs(), x); break;
    case Kind::sub: r = eval_node(e.lhs(), x) - eval_node(e.rhs(), x); break;
    case Kind::mul: r = eval_node(e.lhs(), x) * eval_node(e.rhs(), x); break;
    case Kind::div: {
      const Complex num = eval_node(e.lhs(), x);
      const Complex den = eval_node(e.rhs(), x);
      if (den == Complex(0.0, 0.0)) throw EvalError("division by zero in " + e.str());
      r = num / den;
      break;
    }
  }
  if (!finite(r)) throw EvalError("non-finite value in " + e.str());
  return r;
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
public:
  Parser(std::string_view text, int dim) : text_(text), dim_(dim) {}

  Expr run() {
    skip_ws();
    if (pos_ >= text_.size()) fail("empty expression");
    Expr e = sum();
    skip_ws();
    if (pos_ < text_.size()) fail(std::string("unexpected character '") + text_[pos_] + "'");
    return e;
  }

private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_ + 1); }
  [[noreturn]] void fail_at(const std::string& what, std::size_t pos) const {
    throw ParseError(what, pos + 1);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= text_.size()) fail(std::string("expected '") + c + "' but reached end of input");
      fail(std::string("expected '") + c + "'");
    }
  }

  Expr sum() {
    Expr e = product();
    for (;;) {
      if (accept('+')) {
        e = Expr::binary(Kind::add, e, product());
      } else if (accept('-')) {
        e = Expr::binary(Kind::sub, e, product());
      } else {
        return e;
      }
    }
  }

  Expr product() {
    Expr e = unary();
    for (;;) {
      if (accept('*')) {
        e = Expr::binary(Kind::mul, e, unary());
      } else if (accept('/')) {
        e = Expr::binary(Kind::div, e, unary());
      } else {
        return e;
      }
    }
  }

  Expr unary() {
    if (accept('-')) return Expr::unary(Kind::neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  Expr power() {
    Expr base = atom();
    if (!accept('^')) return base;
    skip_ws();
    const std::size_t at = pos_;
    const Expr exponent = unary();
    if (exponent.max_variable() > 0) fail_at("exponent must be a constant", at);
    Complex v;
    try {
      v = exponent.eval({});
    } catch (const EvalError& err) {
      fail_at(std::string("invalid exponent: ") + err.what(), at);
    }
    if (v.imag() != 0.0 || v.real() != std::floor(v.real())) fail_at("non-integer exponent", at);
    if (v.real() < 0.0) fail_at("negative exponent", at);
    if (v.real() > 1.0e6) fail_at("exponent too large", at);
    return Expr::power(base, static_cast<unsigned>(v.real()));
  }

  Expr atom() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = sum();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail(std::string("unexpected character '") + c + "'");
  }

  Expr number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
        ++n;
      }
      return n;
    };
    std::size_t n = digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      n += digits();
    }
    if (n == 0) fail_at("malformed number", start);
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      const std::size_t save = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (digits() == 0) pos_ = save;  // not an exponent; leave 'e' for the identifier check
    }
    double v = 0.0;
    const auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (res.ec != std::errc() || res.ptr != text_.data() + pos_) fail_at("malformed number", start);
    if (pos_ < text_.size() &&
        (std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      fail("unexpected identifier after number");
    }
    return Expr::constant(v);
  }

  Expr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string_view name = text_.substr(start, pos_ - start);
    if (name == "i") return Expr::constant({0.0, 1.0});
    if (name == "pi") return Expr::constant(std::numbers::pi);
    if (name.size() > 1 && name[0] == 'x') {
      bool all_digits = true;
      for (char ch : name.substr(1)) all_digits = all_digits && std::isdigit(static_cast<unsigned char>(ch));
      if (all_digits) {
        int k = 0;
        std::from_chars(name.data() + 1, name.data() + name.size(), k);
        if (k < 1) fail_at("variable index must be >= 1", start);
        if (k > dim_) {
          fail_at("variable " + std::string(name) + " exceeds dimension " + std::to_string(dim_),
                  start);
        }
        return Expr::variable(k);
      }
    }
    Kind fn;
    if (name == "exp") {
      fn = Kind::exp;
    } else if (name == "sin") {
      fn = Kind::sin;
    } else if (name == "cos") {
      fn = Kind::cos;
    } else if (name == "sqrt") {
      fn = Kind::sqrt;
    } else {
      fail_at("unknown identifier '" + std::string(name) + "'", start);
    }
    expect('(');
    Expr arg = sum();
    expect(')');
    return Expr::unary(fn, arg);
  }

  std::string_view text_;
  int dim_;
  std::size_t pos_ = 0;
};

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

std::uint64_t bits(double d) {
  std::uint64_t u;
  static_assert(sizeof(u) == sizeof(d));
  std::memcpy(&u, &d, sizeof(d));
  return u;
}

}  // namespace

// ---------------------------------------------------------------------------
// Expr

Expr::Expr() : node_(zero_node()) {}

Expr Expr::constant(Complex value) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::constant;
  n->value = value;
  return Expr(std::move(n));
}

Expr Expr::variable(int index) {
  if (index < 1) throw std::invalid_argument("variable index must be >= 1");
  auto n = std::make_shared<Node>();
  n->kind = Kind::variable;
  n->var = index;
  return Expr(std::move(n));
}

Expr Expr::unary(Kind op, Expr arg) {
  if (!is_unary(op)) throw std::invalid_argument("not a unary operator");
  auto n = std::make_shared<Node>();
  n->kind = op;
  n->a = std::move(arg);
  return Expr(std::move(n));
}

Expr Expr::binary(Kind op, Expr lhs, Expr rhs) {
  if (!is_binary(op)) throw std::invalid_argument("not a binary operator");
  auto n = std::make_shared<Node>();
  n->kind = op;
  n->a = std::move(lhs);
  n->b = std::move(rhs);
  return Expr(std::move(n));
}

Expr Expr::power(Expr base, unsigned exponent) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::pow;
  n->a = std::move(base);
  n->exponent = exponent;
  return Expr(std::move(n));
}

Kind Expr::kind() const { return node_->kind; }
Complex Expr::value() const { return node_->value; }
int Expr::variable_index() const { return node_->var; }
unsigned Expr::exponent() const { return node_->exponent; }
const Expr& Expr::arg() const { return node_->a; }
const Expr& Expr::lhs() const { return node_->a; }
const Expr& Expr::rhs() const { return node_->b; }

bool Expr::is_constant(Complex c) const { return kind() == Kind::constant && value() == c; }

int Expr::max_variable() const {
  switch (kind()) {
    case Kind::constant: return 0;
    case Kind::variable: return variable_index();
    case Kind::add:
    case Kind::sub:
    case Kind::mul:
    case Kind::div: return std::max(lhs().max_variable(), rhs().max_variable());
    default: return arg().max_variable();
  }
}

Complex Expr::eval(std::span<const double> x) const { return eval_node(*this, x); }

std::string Expr::str() const {
  std::string out;
  write(out, *this);
  return out;
}

std::uint64_t Expr::hash() const {
  std::uint64_t h = static_cast<std::uint64_t>(kind()) + 1;
  switch (kind()) {
    case Kind::constant: return mix(mix(h, bits(value().real())), bits(value().imag()));
    case Kind::variable: return mix(h, static_cast<std::uint64_t>(variable_index()));
    case Kind::pow: return mix(mix(h, exponent()), arg().hash());
    case Kind::add:
    case Kind::sub:
    case Kind::mul:
    case Kind::div: return mix(mix(h, lhs().hash()), rhs().hash());
    default: return mix(h, arg().hash());
  }
}

bool same_tree(const Expr& a, const Expr& b) {
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Kind::constant: {
      // bitwise, so that -0.0 and 0.0 are distinguished
      return bits(a.value().real()) == bits(b.value().real()) &&
             bits(a.value().imag()) == bits(b.value().imag());
    }
    case Kind::variable: return a.variable_index() == b.variable_index();
    case Kind::pow: return a.exponent() == b.exponent() && same_tree(a.arg(), b.arg());
    case Kind::add:
    case Kind::sub:
    case Kind::mul:
    case Kind::div: return same_tree(a.lhs(), b.lhs()) && same_tree(a.rhs(), b.rhs());
    default: return same_tree(a.arg(), b.arg());
  }
}

Expr parse(std::string_view text, int dim) {
  if (dim < 1) throw std::invalid_argument("dimension must be >= 1");
  return Parser(text, dim).run();
}

// ---------------------------------------------------------------------------
// Builders and differentiation

Expr make_add(const Expr& a, const Expr& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  return Expr::binary(Kind::add, a, b);
}

Expr make_sub(const Expr& a, const Expr& b) {
  if (b.is_zero()) return a;
  if (a.is_zero()) return make_neg(b);
  return Expr::binary(Kind::sub, a, b);
}

Expr make_mul(const Expr& a, const Expr& b) {
  if (a.is_zero() || b.is_zero()) return Expr();
  if (a.is_one()) return b;
  if (b.is_one()) return a;
  return Expr::binary(Kind::mul, a, b);
}

Expr make_div(const Expr& a, const Expr& b) {
  if (a.is_zero()) return Expr();
  if (b.is_one()) return a;
  return Expr::binary(Kind::div, a, b);
}

Expr make_neg(const Expr& a) {
  if (a.is_zero()) return Expr();
  return Expr::unary(Kind::neg, a);
}

Expr make_pow(const Expr& a, unsigned n) {
  if (n == 0) return Expr::constant(1.0);
  if (n == 1) return a;
  return Expr::power(a, n);
}

Expr differentiate(const Expr& e, int var) {
  if (var < 1) throw std::invalid_argument("variable index must be >= 1");
  switch (e.kind()) {
    case Kind::constant: return Expr();
    case Kind::variable: return e.variable_index() == var ? Expr::constant(1.0) : Expr();
    case Kind::neg: return make_neg(differentiate(e.arg(), var));
    case Kind::add: return make_add(differentiate(e.lhs(), var), differentiate(e.rhs(), var));
    case Kind::sub: return make_sub(differentiate(e.lhs(), var), differentiate(e.rhs(), var));
    case Kind::mul: {
      const Expr& a = e.lhs();
      const Expr& b = e.rhs();
      return make_add(make_mul(differentiate(a, var), b), make_mul(a, differentiate(b, var)));
    }
    case Kind::div: {
      const Expr& a = e.lhs();
      const Expr& b = e.rhs();
      const Expr num =
          make_sub(make_mul(differentiate(a, var), b), make_mul(a, differentiate(b, var)));
      return make_div(num, make_pow(b, 2));
    }
    case Kind::pow: {
      const unsigned n = e.exponent();
      if (n == 0) return Expr();
      const Expr da = differentiate(e.arg(), var);
      return make_mul(make_mul(Expr::constant(static_cast<double>(n)), make_pow(e.arg(), n - 1)),
                      da);
    }
    case Kind::exp: return make_mul(differentiate(e.arg(), var), e);
    case Kind::sin:
      return make_mul(differentiate(e.arg(), var), Expr::unary(Kind::cos, e.arg()));
    case Kind::cos:
      return make_neg(make_mul(differentiate(e.arg(), var), Expr::unary(Kind::sin, e.arg())));
    case Kind::sqrt:
      return make_div(differentiate(e.arg(), var), make_mul(Expr::constant(2.0), e));
  }
  return Expr();
}

}  // namespace nonacc::expr
