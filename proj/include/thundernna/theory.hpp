#ifndef THUNDERNNA_THEORY_HPP
#define THUNDERNNA_THEORY_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace thundernna::theory {

using ScalarFn = std::function<double(double)>;

/// A function with its first and second derivatives.
struct ScalarFunctionTriple {
  ScalarFn f;
  ScalarFn f_prime;
  ScalarFn f_double_prime;
};

/// Central-difference check of both derivatives at each probe point,
/// relative tolerance `rel_tol` (absolute below magnitude 1).
bool derivatives_consistent(const ScalarFunctionTriple& t, std::span<const double> probes,
                            double rel_tol = 1e-5);

/// x0 - f'(x0)/f''(x0), or x0 + f'(x0)/f''(x0) when `flip_sign` (ascent).
/// Throws InvalidArgument when |f''(x0)| <= 1e-300.
double newton_step_1d(const ScalarFunctionTriple& t, double x0, bool flip_sign);

/// Integral of -log(x) over [mu, t] by adaptive Gauss-Kronrod, absolute
/// error <= 1e-8. Requires 0 < mu < t.
double numeric_integral_neglog(double mu, double t);

/// t log t - t: the antiderivative as it is commonly quoted for the
/// integrated NLL. Convex on (0, inf). Requires t > 0.
double claimed_antiderivative(double t);

/// t - t log t: the value the limit of the integral of -log actually takes
/// (mu -> 0+). Concave on (0, inf); the negation of claimed_antiderivative.
double neglog_limit_value(double t);

struct ConvexityResult {
  bool convex = false;
  /// Most negative f(x-h) - 2 f(x) + f(x+h) over the grid.
  double worst_second_difference = 0.0;
};

/// Second central differences over `n` uniform points in [lo, hi]; convex iff
/// every one is >= -1e-9. Requires 0 < lo < hi and n >= 3.
ConvexityResult convexity_check(const ScalarFn& f, double lo, double hi, std::size_t n);

enum class CheckStatus { kPass, kFail, kDiscrepancy };

struct CheckRow {
  std::string name;
  std::string expected;
  std::string observed;
  CheckStatus status = CheckStatus::kFail;
};

std::string_view to_string(CheckStatus status);

/// Every derivation check in a fixed order. Rows flagged kDiscrepancy record
/// the sign slip between claimed_antiderivative and the integral it is
/// supposed to equal.
std::vector<CheckRow> run_theory_checks();

}  // namespace thundernna::theory

#endif  // THUNDERNNA_THEORY_HPP
