#ifndef THUNDERNNA_ATTACKS_HPP
#define THUNDERNNA_ATTACKS_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>

#include "thundernna/network.hpp"
#include "thundernna/tensor.hpp"

namespace thundernna {

enum class AttackKind { kThundernna, kFgsm, kPgd, kNewton2 };

std::string_view to_string(AttackKind kind);
/// Parses "thundernna", "fgsm", "pgd" or "newton2"; throws InvalidArgument.
AttackKind parse_attack_kind(std::string_view name);

/// Attack kind plus hyperparameters. Fields that do not apply to `kind` are
/// ignored.
struct AttackSpec {
  AttackKind kind = AttackKind::kFgsm;
  double epsilon = 0.1;  // L-inf budget in pixel units, (0, 1]
  int steps = 8;         // pgd
  /// pgd step; unset means 2.5 * epsilon / steps.
  std::optional<double> step_size;
  double zero_grad_threshold = 1e-12;  // thundernna
  int cg_iters = 5;                    // newton2
  /// newton2 finite-difference HVP step; unset means 1e-3 * (1 + |x|_inf).
  std::optional<double> hvp_step;
  bool random_start = false;  // pgd
  std::uint64_t seed = 0;

  /// Throws InvalidArgument on any out-of-range field.
  void validate() const;
  double effective_step_size() const;
  double effective_hvp_step(const Tensor& x) const;
};

struct AttackOutcome {
  Tensor adversarial;
  /// Whether the prediction moved off `label`. Empty when the clean input is
  /// already misclassified, so there is nothing to attack.
  std::optional<bool> success;
  std::size_t clean_prediction = 0;
  std::size_t adversarial_prediction = 0;
  double linf_norm = 0.0;
  double l2_norm = 0.0;
  double elapsed = 0.0;  // seconds spent generating the adversarial input
  int grad_evals = 0;
  /// newton2 only: the Newton-CG direction was zero and the FGSM step was used.
  bool fallback = false;
};

// Pure perturbation rules, independent of any network.

/// Per coordinate: 0 when |g_i| <= tau, else clamp(1 / g_i, -eps, eps).
Tensor thundernna_delta(const Tensor& gradient, double epsilon, double tau);
/// eps * sign(g) with sign(0) = 0.
Tensor signed_step(const Tensor& gradient, double epsilon);
/// clamp(x + delta, 0, 1).
Tensor apply_perturbation(const Tensor& x, const Tensor& delta);

using GradientFn = std::function<Tensor(const Tensor&)>;

struct NewtonDirection {
  Tensor direction;
  int grad_evals = 0;  // HVPs performed (each costs one gradient)
  bool curvature_exit = false;
};

/// Approximately solves H d = g with `cg_iters` conjugate-gradient steps,
/// where H v is approximated by (grad(x + r v) - g) / r. On non-positive
/// curvature CG stops and the direction falls back to g.
NewtonDirection newton_cg_direction(const GradientFn& grad, const Tensor& x,
                                    const Tensor& g, int cg_iters, double hvp_step);

// Attacks on a single sample. x must lie in [0,1]; `label` is the true class.

AttackOutcome fgsm(const Network& net, const Tensor& x, std::size_t label, double epsilon);
AttackOutcome thundernna(const Network& net, const Tensor& x, std::size_t label,
                         double epsilon, double tau = 1e-12);
AttackOutcome pgd(const Network& net, const Tensor& x, std::size_t label, double epsilon,
                  int steps, double step_size, bool random_start = false,
                  std::uint64_t seed = 0);
AttackOutcome newton2(const Network& net, const Tensor& x, std::size_t label,
                      double epsilon, int cg_iters, double hvp_step);

/// Validates `spec` and dispatches to the matching attack.
AttackOutcome run_attack(const AttackSpec& spec, const Network& net, const Tensor& x,
                         std::size_t label);

}  // namespace thundernna

#endif  // THUNDERNNA_ATTACKS_HPP
