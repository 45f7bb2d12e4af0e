// Scalar expression trees over state variables x1..xd.
//
// Grammar (whitespace ignored):
//   expr   := term  { ('+'|'-') term }
//   term   := unary { ('*'|'/') unary }
//   unary  := '-' unary | power
//   power  := atom [ '^' ['-'] integer ]
//   atom   := number | 'x' integer | func '(' expr ')' | '(' expr ')'
//   func   := sin | cos | exp | tanh
//
// '^' takes a literal integer exponent and binds tighter than unary minus,
// so -x1^2 parses as -(x1^2).
#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "ient/util.hpp"

namespace ient {

enum class ExprKind { kConst, kVar, kNeg, kSin, kCos, kExp, kTanh,
                      kAdd, kSub, kMul, kDiv, kPow };

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  ExprKind kind;
  double value = 0.0;   // kConst
  int index = 0;        // kVar: 0-based; kPow: integer exponent
  Expr a, b;            // children
};

// ------------------------------------------------------------ constructors

inline Expr constant(double v) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::kConst;
  n->value = v;
  return n;
}

// 0-based variable index: var(0) is x1.
inline Expr var(int index) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::kVar;
  n->index = index;
  return n;
}

inline Expr make_unary(ExprKind k, Expr a) {
  auto n = std::make_shared<ExprNode>();
  n->kind = k;
  n->a = std::move(a);
  return n;
}

inline Expr make_binary(ExprKind k, Expr a, Expr b) {
  auto n = std::make_shared<ExprNode>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

inline Expr make_pow(Expr a, int e) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::kPow;
  n->index = e;
  n->a = std::move(a);
  return n;
}

inline bool is_const(const Expr& e, double v) {
  return e->kind == ExprKind::kConst && e->value == v;
}

// Folding constructors used by diff so derivative trees stay small.
inline Expr fold_add(Expr a, Expr b) {
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return make_binary(ExprKind::kAdd, std::move(a), std::move(b));
}

inline Expr fold_sub(Expr a, Expr b) {
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return make_unary(ExprKind::kNeg, std::move(b));
  return make_binary(ExprKind::kSub, std::move(a), std::move(b));
}

inline Expr fold_mul(Expr a, Expr b) {
  if (is_const(a, 0.0) || is_const(b, 0.0)) return constant(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  return make_binary(ExprKind::kMul, std::move(a), std::move(b));
}

// ------------------------------------------------------------------ parse

namespace detail {

class Parser {
 public:
  Parser(const std::string& src, int dim) : src_(src), dim_(dim) {}

  Expr parse() {
    Expr e = expr();
    skip_ws();
    if (pos_ != src_.size())
      throw ParseError("unexpected trailing input", pos_);
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < src_.size() ? src_[pos_] : '\0';
  }

  Expr expr() {
    Expr e = term();
    for (;;) {
      if (consume('+')) e = make_binary(ExprKind::kAdd, e, term());
      else if (consume('-')) e = make_binary(ExprKind::kSub, e, term());
      else return e;
    }
  }

  Expr term() {
    Expr e = unary();
    for (;;) {
      if (consume('*')) e = make_binary(ExprKind::kMul, e, unary());
      else if (consume('/')) e = make_binary(ExprKind::kDiv, e, unary());
      else return e;
    }
  }

  Expr unary() {
    if (consume('-')) return make_unary(ExprKind::kNeg, unary());
    return power();
  }

  Expr power() {
    Expr base = atom();
    if (consume('^')) {
      bool neg = consume('-');
      long v = integer("integer exponent expected");
      return make_pow(base, static_cast<int>(neg ? -v : v));
    }
    return base;
  }

  long integer(const char* what) {
    skip_ws();
    std::size_t at = pos_;
    if (pos_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_])))
      throw ParseError(what, at);
    long v = 0;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
      v = v * 10 + (src_[pos_] - '0');
      if (v > 1000000) throw ParseError("integer literal too large", at);
      ++pos_;
    }
    return v;
  }

  Expr atom() {
    skip_ws();
    std::size_t at = pos_;
    if (pos_ >= src_.size()) throw ParseError("operand expected", at);
    char c = src_[pos_];

    if (c == '(') {
      ++pos_;
      Expr e = expr();
      if (!consume(')')) throw ParseError("')' expected", pos_);
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::string name;
      while (pos_ < src_.size() &&
             std::isalpha(static_cast<unsigned char>(src_[pos_])))
        name += src_[pos_++];
      if (name == "x") {
        long idx = integer("variable index expected");
        if (idx < 1 || idx > dim_)
          throw ParseError("variable x" + std::to_string(idx) +
                               " out of range for dimension " +
                               std::to_string(dim_),
                           at);
        return var(static_cast<int>(idx - 1));
      }
      ExprKind k;
      if (name == "sin") k = ExprKind::kSin;
      else if (name == "cos") k = ExprKind::kCos;
      else if (name == "exp") k = ExprKind::kExp;
      else if (name == "tanh") k = ExprKind::kTanh;
      else throw ParseError("unknown identifier '" + name + "'", at);
      if (!consume('(')) throw ParseError("'(' expected after function name", pos_);
      Expr arg = expr();
      if (!consume(')')) throw ParseError("')' expected", pos_);
      return make_unary(k, arg);
    }
    throw ParseError("operand expected", at);
  }

  Expr number() {
    std::size_t at = pos_;
    while (pos_ < src_.size() &&
           (std::isdigit(static_cast<unsigned char>(src_[pos_])) ||
            src_[pos_] == '.'))
      ++pos_;
    // scientific suffix: 1e-3, 2.5e4
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t mark = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        while (pos_ < src_.size() &&
               std::isdigit(static_cast<unsigned char>(src_[pos_])))
          ++pos_;
      } else {
        pos_ = mark;  // 'e' belongs to something else; not a valid suffix
      }
    }
    try {
      std::size_t used = 0;
      double v = std::stod(src_.substr(at, pos_ - at), &used);
      if (used != pos_ - at) throw std::invalid_argument("");
      return constant(v);
    } catch (const std::exception&) {
      throw ParseError("malformed number", at);
    }
  }

  const std::string& src_;
  int dim_;
  std::size_t pos_ = 0;
};

}  // namespace detail

// Parses `src` over variables x1..x<dim>.  Throws ParseError with the byte
// offset of the failure.
inline Expr parse_expr(const std::string& src, int dim) {
  if (dim < 0) throw ConfigError("negative dimension");
  return detail::Parser(src, dim).parse();
}

// ------------------------------------------------------------------- eval

inline double ipow(double base, int e) {
  if (e == 0) return 1.0;
  if (e < 0) {
    if (base == 0.0) throw EvalDomainError("0 raised to a negative power");
    return 1.0 / ipow(base, -e);
  }
  double acc = 1.0, p = base;
  for (int k = e; k > 0; k >>= 1) {
    if (k & 1) acc *= p;
    p *= p;
  }
  return acc;
}

inline double eval(const Expr& e, const double* x) {
  switch (e->kind) {
    case ExprKind::kConst: return e->value;
    case ExprKind::kVar:   return x[e->index];
    case ExprKind::kNeg:   return -eval(e->a, x);
    case ExprKind::kSin:   return std::sin(eval(e->a, x));
    case ExprKind::kCos:   return std::cos(eval(e->a, x));
    case ExprKind::kExp:   return std::exp(eval(e->a, x));
    case ExprKind::kTanh:  return std::tanh(eval(e->a, x));
    case ExprKind::kAdd:   return eval(e->a, x) + eval(e->b, x);
    case ExprKind::kSub:   return eval(e->a, x) - eval(e->b, x);
    case ExprKind::kMul:   return eval(e->a, x) * eval(e->b, x);
    case ExprKind::kDiv: {
      double den = eval(e->b, x);
      if (den == 0.0) throw EvalDomainError("division by zero");
      return eval(e->a, x) / den;
    }
    case ExprKind::kPow:   return ipow(eval(e->a, x), e->index);
  }
  throw Error("corrupt expression node");
}

inline double eval(const Expr& e, const std::vector<double>& x) {
  return eval(e, x.data());
}

// ------------------------------------------------------------------- diff

// Exact partial derivative with respect to x<wrt+1> (0-based wrt).
inline Expr diff(const Expr& e, int wrt) {
  switch (e->kind) {
    case ExprKind::kConst: return constant(0.0);
    case ExprKind::kVar:   return constant(e->index == wrt ? 1.0 : 0.0);
    case ExprKind::kNeg: {
      Expr da = diff(e->a, wrt);
      if (is_const(da, 0.0)) return da;
      return make_unary(ExprKind::kNeg, da);
    }
    case ExprKind::kSin:
      return fold_mul(make_unary(ExprKind::kCos, e->a), diff(e->a, wrt));
    case ExprKind::kCos:
      return fold_mul(make_unary(ExprKind::kNeg,
                                 make_unary(ExprKind::kSin, e->a)),
                      diff(e->a, wrt));
    case ExprKind::kExp:
      return fold_mul(make_unary(ExprKind::kExp, e->a), diff(e->a, wrt));
    case ExprKind::kTanh:
      // d tanh(f) = (1 - tanh(f)^2) f'
      return fold_mul(fold_sub(constant(1.0),
                               make_pow(make_unary(ExprKind::kTanh, e->a), 2)),
                      diff(e->a, wrt));
    case ExprKind::kAdd: return fold_add(diff(e->a, wrt), diff(e->b, wrt));
    case ExprKind::kSub: return fold_sub(diff(e->a, wrt), diff(e->b, wrt));
    case ExprKind::kMul:
      return fold_add(fold_mul(diff(e->a, wrt), e->b),
                      fold_mul(e->a, diff(e->b, wrt)));
    case ExprKind::kDiv:
      // (f'g - fg') / g^2
      return make_binary(
          ExprKind::kDiv,
          fold_sub(fold_mul(diff(e->a, wrt), e->b),
                   fold_mul(e->a, diff(e->b, wrt))),
          make_pow(e->b, 2));
    case ExprKind::kPow: {
      if (e->index == 0) return constant(0.0);
      Expr da = diff(e->a, wrt);
      Expr rest = e->index == 1
                      ? constant(1.0)
                      : Expr(make_pow(e->a, e->index - 1));
      return fold_mul(fold_mul(constant(static_cast<double>(e->index)), rest),
                      da);
    }
  }
  throw Error("corrupt expression node");
}

// ------------------------------------------------------------------ print

namespace detail {

inline void format_double(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

inline void print_rec(const Expr& e, std::string& out) {
  switch (e->kind) {
    case ExprKind::kConst:
      if (e->value < 0) {
        out += "(";
        format_double(out, e->value);
        out += ")";
      } else {
        format_double(out, e->value);
      }
      return;
    case ExprKind::kVar:
      out += "x" + std::to_string(e->index + 1);
      return;
    case ExprKind::kNeg:
      out += "(-";
      print_rec(e->a, out);
      out += ")";
      return;
    case ExprKind::kSin: out += "sin("; print_rec(e->a, out); out += ")"; return;
    case ExprKind::kCos: out += "cos("; print_rec(e->a, out); out += ")"; return;
    case ExprKind::kExp: out += "exp("; print_rec(e->a, out); out += ")"; return;
    case ExprKind::kTanh: out += "tanh("; print_rec(e->a, out); out += ")"; return;
    case ExprKind::kAdd:
    case ExprKind::kSub:
    case ExprKind::kMul:
    case ExprKind::kDiv: {
      char op = e->kind == ExprKind::kAdd ? '+'
              : e->kind == ExprKind::kSub ? '-'
              : e->kind == ExprKind::kMul ? '*' : '/';
      out += "(";
      print_rec(e->a, out);
      out += op;
      print_rec(e->b, out);
      out += ")";
      return;
    }
    case ExprKind::kPow:
      out += "(";
      print_rec(e->a, out);
      out += "^";
      if (e->index < 0) out += "-" + std::to_string(-static_cast<long>(e->index));
      else out += std::to_string(e->index);
      out += ")";
      return;
  }
}

}  // namespace detail

// Fully parenthesized form; parse(to_string(e), d) evaluates identically.
inline std::string to_string(const Expr& e) {
  std::string out;
  detail::print_rec(e, out);
  return out;
}

// Largest 1-based variable index referenced, 0 if none.
inline int max_var_index(const Expr& e) {
  int m = e->kind == ExprKind::kVar ? e->index + 1 : 0;
  if (e->a) m = std::max(m, max_var_index(e->a));
  if (e->b) m = std::max(m, max_var_index(e->b));
  return m;
}

}  // namespace ient
