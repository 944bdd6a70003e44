#include "thundernna/theory.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "thundernna/errors.hpp"

namespace thundernna::theory {
namespace {

std::string fmt(const char* pattern, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, pattern, a);
  return buf;
}

std::string fmt(const char* pattern, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, pattern, a, b);
  return buf;
}

CheckRow make_row(std::string name, std::string expected, std::string observed, bool ok) {
  return {std::move(name), std::move(expected), std::move(observed),
          ok ? CheckStatus::kPass : CheckStatus::kFail};
}

ScalarFunctionTriple power_triple(int n) {
  return {[n](double x) { return std::pow(x, n); },
          [n](double x) { return n * std::pow(x, n - 1); },
          [n](double x) { return n * (n - 1) * std::pow(x, n - 2); }};
}

}  // namespace

bool derivatives_consistent(const ScalarFunctionTriple& t, std::span<const double> probes,
                            double rel_tol) {
  auto close = [rel_tol](double a, double b) {
    return std::abs(a - b) <= rel_tol * std::max({1.0, std::abs(a), std::abs(b)});
  };
  for (double x : probes) {
    const double h = 1e-4 * std::max(1.0, std::abs(x));
    const double d1 = (t.f(x + h) - t.f(x - h)) / (2.0 * h);
    const double d2 = (t.f_prime(x + h) - t.f_prime(x - h)) / (2.0 * h);
    if (!close(d1, t.f_prime(x)) || !close(d2, t.f_double_prime(x))) return false;
  }
  return true;
}

double newton_step_1d(const ScalarFunctionTriple& t, double x0, bool flip_sign) {
  const double curvature = t.f_double_prime(x0);
  if (!(std::abs(curvature) > 1e-300)) {
    throw InvalidArgument("second derivative vanishes at x0");
  }
  const double step = t.f_prime(x0) / curvature;
  return flip_sign ? x0 + step : x0 - step;
}

double numeric_integral_neglog(double mu, double t) {
  if (!(mu > 0.0 && t > mu) || !std::isfinite(t)) {
    throw InvalidArgument("integral needs 0 < mu < t");
  }
  using Quad = boost::math::quadrature::gauss_kronrod<double, 15>;
  auto integrand = [](double x) { return -std::log(x); };
  // The log singularity sits at 0, so split into pieces that halve toward mu;
  // each piece is then smooth relative to its own width.
  double total = 0.0;
  double hi = t;
  while (hi > mu) {
    const double lo = std::max(mu, hi * 0.5);
    total += Quad::integrate(integrand, lo, hi, 15, 1e-13);
    hi = lo;
  }
  return total;
}

double claimed_antiderivative(double t) {
  if (!(t > 0.0)) throw InvalidArgument("antiderivative requires t > 0");
  return t * std::log(t) - t;
}

double neglog_limit_value(double t) {
  if (!(t > 0.0)) throw InvalidArgument("antiderivative requires t > 0");
  return t - t * std::log(t);
}

ConvexityResult convexity_check(const ScalarFn& f, double lo, double hi, std::size_t n) {
  if (!(lo > 0.0 && hi > lo) || n < 3) {
    throw InvalidArgument("convexity grid needs 0 < lo < hi and n >= 3");
  }
  const double h = (hi - lo) / static_cast<double>(n - 1);
  ConvexityResult result{true, 0.0};
  bool first = true;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double x = lo + h * static_cast<double>(i);
    const double second = f(x - h) - 2.0 * f(x) + f(x + h);
    if (first || second < result.worst_second_difference) {
      result.worst_second_difference = second;
      first = false;
    }
  }
  result.convex = result.worst_second_difference >= -1e-9;
  return result;
}

std::string_view to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::kPass:
      return "PASS";
    case CheckStatus::kFail:
      return "FAIL";
    case CheckStatus::kDiscrepancy:
      return "DISCREPANCY";
  }
  return "?";
}

std::vector<CheckRow> run_theory_checks() {
  std::vector<CheckRow> rows;
  const double e = std::numbers::e;

  const auto square = power_triple(2);
  const auto quartic = power_triple(4);
  {
    const double x = newton_step_1d(square, 1.0, false);
    rows.push_back(make_row("newton step, f=x^2, x0=1", "0", fmt("%.12g", x), x == 0.0));
  }
  {
    const double x = newton_step_1d(square, 1.0, true);
    rows.push_back(make_row("newton step flipped, f=x^2, x0=1", "2", fmt("%.12g", x), x == 2.0));
  }
  {
    const double x = newton_step_1d(quartic, 1.0, false);
    rows.push_back(make_row("newton step, f=x^4, x0=1", "2/3", fmt("%.12g", x),
                            std::abs(x - 2.0 / 3.0) < 1e-12));
  }
  {
    const double probes[] = {-2.0, -0.5, 0.3, 1.0, 3.0};
    const bool ok = derivatives_consistent(quartic, probes);
    rows.push_back(make_row("derivative triple consistent, f=x^4", "consistent",
                            ok ? "consistent" : "inconsistent", ok));
  }
  {
    const double v = numeric_integral_neglog(1e-8, 1.0);
    rows.push_back(make_row("int_{1e-8}^{1} -log x dx", "1 (tol 1e-5)", fmt("%.10f", v),
                            std::abs(v - 1.0) <= 1e-5));
  }
  {
    const double v = numeric_integral_neglog(1e-8, e);
    rows.push_back(make_row("int_{1e-8}^{e} -log x dx vs t - t log t at e",
                            "0 (tol 2e-5)", fmt("%.10f", v), std::abs(v) <= 2e-5));
  }
  {
    const double v = numeric_integral_neglog(0.5, 1.0);
    const double closed = neglog_limit_value(1.0) - neglog_limit_value(0.5);
    rows.push_back(make_row("int_{0.5}^{1} -log x dx vs antiderivative difference",
                            fmt("%.10f", closed), fmt("%.10f", v),
                            std::abs(v - closed) <= 1e-8));
  }
  {
    const double a = claimed_antiderivative(1.0);
    const double b = claimed_antiderivative(e);
    rows.push_back(make_row("t log t - t at t=1 and t=e", "-1, 0", fmt("%.12g, %.3g", a, b),
                            a == -1.0 && std::abs(b) < 1e-15));
  }
  {
    const auto r = convexity_check(claimed_antiderivative, 0.01, 10.0, 1000);
    rows.push_back(make_row("convexity of t log t - t on [0.01,10], n=1000", "convex",
                            fmt(r.convex ? "convex (worst 2nd diff %.3e)"
                                         : "not convex (worst 2nd diff %.3e)",
                                r.worst_second_difference),
                            r.convex));
  }
  {
    const auto r = convexity_check([](double t) { return -t * t; }, 0.01, 10.0, 1000);
    rows.push_back(make_row("convexity of -t^2 on [0.01,10] (control)", "not convex",
                            fmt(r.convex ? "convex (worst 2nd diff %.3e)"
                                         : "not convex (worst 2nd diff %.3e)",
                                r.worst_second_difference),
                            !r.convex));
  }
  {
    const auto r = convexity_check(neglog_limit_value, 0.01, 10.0, 1000);
    rows.push_back(make_row("convexity of t - t log t on [0.01,10], n=1000", "not convex",
                            fmt(r.convex ? "convex (worst 2nd diff %.3e)"
                                         : "not convex (worst 2nd diff %.3e)",
                                r.worst_second_difference),
                            !r.convex));
  }
  {
    // The limit evaluates to t - t log t, which is concave; the quoted
    // closed form t log t - t is its negation and is the convex one.
    const double t = 2.0;
    const double integral = numeric_integral_neglog(1e-12, t);
    const double claimed = claimed_antiderivative(t);
    const auto literal = convexity_check(neglog_limit_value, 0.01, 10.0, 1000);
    const bool negated = std::abs(integral + claimed) <= 1e-6;
    CheckRow row{"sign of antiderivative: integral vs t log t - t at t=2",
                 fmt("equal: %.8f", claimed),
                 fmt("integral = %.8f = -(t log t - t); literal limit t - t log t is ",
                     integral) +
                     (literal.convex ? "convex" : "concave"),
                 CheckStatus::kFail};
    if (negated && !literal.convex) {
      row.status = CheckStatus::kDiscrepancy;
    } else if (std::abs(integral - claimed) <= 1e-6) {
      row.status = CheckStatus::kPass;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace thundernna::theory
