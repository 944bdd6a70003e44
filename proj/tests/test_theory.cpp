#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "thundernna/errors.hpp"
#include "thundernna/theory.hpp"

using namespace thundernna;
using namespace thundernna::theory;

namespace {

ScalarFunctionTriple quadratic(double a, double b, double c) {
  return {[=](double x) { return a * (x - c) * (x - c) + b; },
          [=](double x) { return 2 * a * (x - c); }, [=](double) { return 2 * a; }};
}

// Antiderivative of -log x, hand-differentiated: d/dt (t - t log t) = -log t.
double true_antiderivative(double t) { return t - t * std::log(t); }

}  // namespace

TEST_CASE("newton_step_1d examples") {
  const auto sq = quadratic(1, 0, 0);
  CHECK(newton_step_1d(sq, 1.0, false) == 0.0);
  CHECK(newton_step_1d(sq, 1.0, true) == 2.0);

  const ScalarFunctionTriple quartic{[](double x) { return std::pow(x, 4); },
                                     [](double x) { return 4 * std::pow(x, 3); },
                                     [](double x) { return 12 * x * x; }};
  // 1 - 4/12
  CHECK(newton_step_1d(quartic, 1.0, false) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(newton_step_1d(quartic, 0.0, false), InvalidArgument);
}

TEST_CASE("newton step is exact on random quadratics") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 100; ++i) {
    double a = u(rng);
    if (std::abs(a) < 1e-3) a = 1.0;
    const double b = u(rng), c = u(rng), x0 = u(rng);
    CHECK(std::abs(newton_step_1d(quadratic(a, b, c), x0, false) - c) <= 1e-12);
  }
}

TEST_CASE("derivative triples are checked by finite differences") {
  const double probes[] = {-1.5, 0.2, 2.0};
  CHECK(derivatives_consistent(quadratic(2, 1, 0.5), probes));
  ScalarFunctionTriple wrong = quadratic(2, 1, 0.5);
  wrong.f_double_prime = [](double) { return 3.0; };
  CHECK_FALSE(derivatives_consistent(wrong, probes));
}

TEST_CASE("numeric_integral_neglog examples") {
  CHECK(std::abs(numeric_integral_neglog(1e-8, 1.0) - 1.0) <= 1e-5);
  CHECK(std::abs(numeric_integral_neglog(1e-8, std::numbers::e) -
                 true_antiderivative(std::numbers::e)) <= 2e-5);
  CHECK(std::abs(numeric_integral_neglog(0.5, 1.0) -
                 (true_antiderivative(1.0) - true_antiderivative(0.5))) <= 1e-8);
  CHECK_THROWS_AS(numeric_integral_neglog(0.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(numeric_integral_neglog(2.0, 1.0), InvalidArgument);
}

TEST_CASE("quadrature matches the closed form on random intervals") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> logu(std::log(1e-6), std::log(10.0));
  for (int i = 0; i < 50; ++i) {
    double mu = std::exp(logu(rng)), t = std::exp(logu(rng));
    if (mu > t) std::swap(mu, t);
    if (t - mu < 1e-9) continue;
    const double closed = true_antiderivative(t) - true_antiderivative(mu);
    CHECK(std::abs(numeric_integral_neglog(mu, t) - closed) <= 1e-6);
  }
}

TEST_CASE("claimed antiderivative values and its sign relation to the integral") {
  CHECK(claimed_antiderivative(1.0) == -1.0);
  CHECK(std::abs(claimed_antiderivative(std::numbers::e)) < 1e-15);
  CHECK_THROWS_AS(claimed_antiderivative(0.0), InvalidArgument);
  for (double t : {0.3, 2.0, 7.5}) {
    CHECK(numeric_integral_neglog(1e-12, t) ==
          doctest::Approx(-claimed_antiderivative(t)).epsilon(1e-8));
    CHECK(neglog_limit_value(t) == doctest::Approx(-claimed_antiderivative(t)));
  }
}

TEST_CASE("convexity_check examples") {
  const auto claimed = convexity_check(claimed_antiderivative, 0.01, 10.0, 1000);
  CHECK(claimed.convex);
  CHECK(claimed.worst_second_difference > 0.0);

  CHECK_FALSE(convexity_check([](double t) { return -t * t; }, 0.01, 10.0, 1000).convex);
  CHECK_FALSE(convexity_check(neglog_limit_value, 0.01, 10.0, 1000).convex);

  CHECK_THROWS_AS(convexity_check(claimed_antiderivative, 0.0, 1.0, 10), InvalidArgument);
  CHECK_THROWS_AS(convexity_check(claimed_antiderivative, 1.0, 2.0, 2), InvalidArgument);
}

TEST_CASE("claimed antiderivative is convex on every sampled grid in (0, inf)") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> loglo(std::log(1e-4), std::log(50.0));
  for (int i = 0; i < 50; ++i) {
    const double lo = std::exp(loglo(rng));
    const double hi = lo * (1.0 + 10.0 * std::uniform_real_distribution<double>(0.01, 1.0)(rng));
    CHECK(convexity_check(claimed_antiderivative, lo, hi, 3 + i * 20).convex);
  }
}

TEST_CASE("theory table has exactly one discrepancy and no failures") {
  const auto rows = run_theory_checks();
  int discrepancies = 0;
  for (const auto& r : rows) {
    CHECK_MESSAGE(r.status != CheckStatus::kFail, r.name);
    discrepancies += r.status == CheckStatus::kDiscrepancy;
  }
  CHECK(discrepancies == 1);
}
