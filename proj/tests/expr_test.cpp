#include "ient/expr.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "ient/util.hpp"

using ient::Expr;
using ient::diff;
using ient::eval;
using ient::parse_expr;
using ient::to_string;

TEST(Expr, ParsesArithmeticWithPrecedence) {
  Expr e = parse_expr("x1 + x2*x3 - x1/2", 3);
  std::vector<double> x{2.0, 3.0, 5.0};
  EXPECT_DOUBLE_EQ(eval(e, x), 2.0 + 15.0 - 1.0);
}

TEST(Expr, ParsesFunctionsAndPow) {
  Expr e = parse_expr("sin(x1)*cos(x2) + exp(-x1) + tanh(x2)^2 + x1^3", 2);
  std::vector<double> x{0.7, -1.3};
  double want = std::sin(0.7) * std::cos(-1.3) + std::exp(-0.7) +
                std::pow(std::tanh(-1.3), 2) + std::pow(0.7, 3);
  EXPECT_NEAR(eval(e, x), want, 1e-15);
}

TEST(Expr, UnaryMinusBindsLooserThanPow) {
  Expr e = parse_expr("-x1^2", 1);
  std::vector<double> x{3.0};
  EXPECT_DOUBLE_EQ(eval(e, x), -9.0);
}

TEST(Expr, NegativeExponent) {
  Expr e = parse_expr("x1^-2", 1);
  std::vector<double> x{4.0};
  EXPECT_DOUBLE_EQ(eval(e, x), 1.0 / 16.0);
}

TEST(Expr, ScientificNumbers) {
  Expr e = parse_expr("1.5e-3 + 2e2", 0);
  EXPECT_DOUBLE_EQ(eval(e, nullptr), 0.0015 + 200.0);
}

TEST(Expr, SyntaxErrorCarriesOffset) {
  try {
    parse_expr("x1 +", 2);
    FAIL() << "expected ParseError";
  } catch (const ient::ParseError& err) {
    EXPECT_EQ(err.offset, 4u);
  }
}

TEST(Expr, RejectsUnknownIdentifier) {
  EXPECT_THROW(parse_expr("sinh(x1)", 1), ient::ParseError);
}

TEST(Expr, RejectsOutOfRangeVariable) {
  EXPECT_THROW(parse_expr("x3", 2), ient::ParseError);
  EXPECT_THROW(parse_expr("x0", 2), ient::ParseError);
}

TEST(Expr, RejectsTrailingGarbage) {
  EXPECT_THROW(parse_expr("x1 x2", 2), ient::ParseError);
}

TEST(Expr, DivisionByZeroThrows) {
  Expr e = parse_expr("x1 / x2", 2);
  std::vector<double> x{1.0, 0.0};
  EXPECT_THROW(eval(e, x), ient::EvalDomainError);
}

TEST(Expr, ZeroToNegativePowerThrows) {
  Expr e = parse_expr("x1^-1", 1);
  std::vector<double> x{0.0};
  EXPECT_THROW(eval(e, x), ient::EvalDomainError);
}

TEST(Expr, DiffKnownDerivatives) {
  std::vector<double> x{0.8, -0.4};
  struct Case {
    const char* src;
    double want;  // d/dx1 at x
  };
  const Case cases[] = {
      {"x1*x1", 1.6},
      {"sin(x1)", std::cos(0.8)},
      {"cos(x1)", -std::sin(0.8)},
      {"exp(2*x1)", 2.0 * std::exp(1.6)},
      {"tanh(x1)", 1.0 - ient::sqr(std::tanh(0.8))},
      {"x1^3", 3.0 * 0.64},
      {"x1/x2", 1.0 / -0.4},
      {"x2", 0.0},
  };
  for (const auto& c : cases) {
    Expr d = diff(parse_expr(c.src, 2), 0);
    EXPECT_NEAR(eval(d, x), c.want, 1e-12) << c.src;
  }
}

namespace {

// Random expression of bounded depth.  Division and negative exponents are
// excluded so that random points stay in the domain of every subterm.
ient::Expr random_expr(ient::Rng& rng, int dim, int depth) {
  using ient::ExprKind;
  if (depth == 0 || rng.uniform() < 0.3) {
    if (rng.uniform() < 0.4) return ient::constant(rng.uniform(-2.0, 2.0));
    return ient::var(static_cast<int>(rng.index(dim)));
  }
  switch (rng.index(7)) {
    case 0: return ient::make_binary(ExprKind::kAdd, random_expr(rng, dim, depth - 1),
                                     random_expr(rng, dim, depth - 1));
    case 1: return ient::make_binary(ExprKind::kSub, random_expr(rng, dim, depth - 1),
                                     random_expr(rng, dim, depth - 1));
    case 2: return ient::make_binary(ExprKind::kMul, random_expr(rng, dim, depth - 1),
                                     random_expr(rng, dim, depth - 1));
    case 3: return ient::make_unary(ExprKind::kSin, random_expr(rng, dim, depth - 1));
    case 4: return ient::make_unary(ExprKind::kCos, random_expr(rng, dim, depth - 1));
    case 5: return ient::make_unary(ExprKind::kTanh, random_expr(rng, dim, depth - 1));
    default:
      return ient::make_pow(random_expr(rng, dim, depth - 1),
                            static_cast<int>(rng.index(4)));
  }
}

double central_fd(const ient::Expr& e, int wrt, std::vector<double> x, double h) {
  x[wrt] += h;
  double fp = eval(e, x);
  x[wrt] -= 2 * h;
  double fm = eval(e, x);
  return (fp - fm) / (2 * h);
}

}  // namespace

TEST(Expr, DiffMatchesCentralDifferences) {
  ient::Rng rng(20240811);
  const int dim = 3;
  int checked = 0;
  while (checked < 1000) {
    ient::Expr e = random_expr(rng, dim, 4);
    std::vector<double> x(dim);
    for (auto& v : x) v = rng.uniform(-1.5, 1.5);
    int wrt = static_cast<int>(rng.index(dim));
    ient::Expr d = diff(e, wrt);
    double exact = eval(d, x);
    double fd = central_fd(e, wrt, x, 1e-6);
    if (!std::isfinite(exact) || !std::isfinite(fd)) continue;
    // second derivatives of nested products can be large; skip wild points
    if (std::abs(exact) > 1e6) continue;
    EXPECT_LE(std::abs(exact - fd), 1e-5 * (1.0 + std::abs(exact)))
        << to_string(e) << " wrt x" << wrt + 1;
    ++checked;
  }
}

TEST(Expr, PrintParseRoundTripEvaluatesEqual) {
  ient::Rng rng(77001);
  const int dim = 3;
  for (int trial = 0; trial < 100; ++trial) {
    ient::Expr e = random_expr(rng, dim, 4);
    ient::Expr back = parse_expr(to_string(e), dim);
    for (int pt = 0; pt < 100; ++pt) {
      std::vector<double> x(dim);
      for (auto& v : x) v = rng.uniform(-2.0, 2.0);
      double a = eval(e, x);
      double b = eval(back, x);
      if (!std::isfinite(a)) continue;
      EXPECT_DOUBLE_EQ(a, b) << to_string(e);
    }
  }
}

TEST(Expr, MaxVarIndex) {
  EXPECT_EQ(ient::max_var_index(parse_expr("x1 + sin(x3)", 5)), 3);
  EXPECT_EQ(ient::max_var_index(parse_expr("1.0", 5)), 0);
}
