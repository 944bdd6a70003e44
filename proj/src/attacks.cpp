#include "thundernna/attacks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <string>

#include "thundernna/autodiff.hpp"
#include "thundernna/errors.hpp"

namespace thundernna {
namespace {

using Clock = std::chrono::steady_clock;

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    throw InvalidArgument("epsilon must lie in (0, 1], got " + std::to_string(epsilon));
  }
}

void check_sample(const Network& net, const Tensor& x, std::size_t label) {
  if (batch_size(net, x) != 1 || x.shape() != net.input_shape()) {
    throw ShapeError("attacks take a single sample of shape " + to_string(net.input_shape()));
  }
  if (label >= net.num_classes()) {
    throw InvalidArgument("label " + std::to_string(label) + " out of range");
  }
  for (double v : x.data()) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("attack input must lie in [0, 1]");
  }
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

AttackOutcome finish(const Network& net, const Tensor& x, std::size_t label,
                     Tensor adversarial, int grad_evals, double elapsed) {
  AttackOutcome out;
  out.clean_prediction = predict(net, x.data());
  out.adversarial_prediction = predict(net, adversarial.data());
  if (out.clean_prediction == label) out.success = out.adversarial_prediction != label;
  out.linf_norm = linf_distance(adversarial.data(), x.data());
  out.l2_norm = l2_distance(adversarial.data(), x.data());
  out.grad_evals = grad_evals;
  out.elapsed = elapsed;
  out.adversarial = std::move(adversarial);
  return out;
}

}  // namespace

std::string_view to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::kThundernna:
      return "thundernna";
    case AttackKind::kFgsm:
      return "fgsm";
    case AttackKind::kPgd:
      return "pgd";
    case AttackKind::kNewton2:
      return "newton2";
  }
  return "unknown";
}

AttackKind parse_attack_kind(std::string_view name) {
  for (auto kind : {AttackKind::kThundernna, AttackKind::kFgsm, AttackKind::kPgd,
                    AttackKind::kNewton2}) {
    if (to_string(kind) == name) return kind;
  }
  throw InvalidArgument("unknown attack kind '" + std::string(name) + "'");
}

void AttackSpec::validate() const {
  check_epsilon(epsilon);
  if (steps < 1) throw InvalidArgument("steps must be >= 1");
  if (step_size && !(*step_size > 0.0)) throw InvalidArgument("step size must be > 0");
  if (!(zero_grad_threshold >= 0.0)) throw InvalidArgument("tau must be >= 0");
  if (cg_iters < 1) throw InvalidArgument("cg_iters must be >= 1");
  if (hvp_step && !(*hvp_step > 0.0)) throw InvalidArgument("hvp step must be > 0");
}

double AttackSpec::effective_step_size() const {
  return step_size ? *step_size : 2.5 * epsilon / static_cast<double>(steps);
}

double AttackSpec::effective_hvp_step(const Tensor& x) const {
  return hvp_step ? *hvp_step : 1e-3 * (1.0 + linf_norm(x.data()));
}

Tensor thundernna_delta(const Tensor& gradient, double epsilon, double tau) {
  Tensor delta(gradient.shape());
  for (std::size_t i = 0; i < gradient.size(); ++i) {
    const double g = gradient[i];
    if (std::abs(g) <= tau) continue;
    delta[i] = std::clamp(1.0 / g, -epsilon, epsilon);
  }
  return delta;
}

Tensor signed_step(const Tensor& gradient, double epsilon) {
  Tensor delta(gradient.shape());
  for (std::size_t i = 0; i < gradient.size(); ++i) delta[i] = epsilon * sign(gradient[i]);
  return delta;
}

Tensor apply_perturbation(const Tensor& x, const Tensor& delta) {
  if (x.shape() != delta.shape()) throw ShapeError("perturbation shape mismatch");
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = clamp01(x[i] + delta[i]);
  return out;
}

NewtonDirection newton_cg_direction(const GradientFn& grad, const Tensor& x,
                                    const Tensor& g, int cg_iters, double hvp_step) {
  if (cg_iters < 1) throw InvalidArgument("cg_iters must be >= 1");
  if (!(hvp_step > 0.0)) throw InvalidArgument("hvp step must be > 0");
  if (g.shape() != x.shape()) throw ShapeError("gradient shape mismatch");

  NewtonDirection out{Tensor(x.shape()), 0, false};
  Tensor residual = g;
  Tensor p = g;
  double rs = dot(residual, residual);
  const double rs0 = rs;
  Tensor probe(x.shape());
  Tensor hp(x.shape());

  for (int it = 0; it < cg_iters && rs > 0.0; ++it) {
    // The probe moves a distance hvp_step along p / |p|; rescaling by |p|
    // gives H p for the linearized gradient.
    const double p_norm = l2_norm(p.data());
    for (std::size_t i = 0; i < x.size(); ++i) probe[i] = x[i] + hvp_step * p[i] / p_norm;
    const Tensor g_probe = grad(probe);
    ++out.grad_evals;
    for (std::size_t i = 0; i < x.size(); ++i) hp[i] = (g_probe[i] - g[i]) / hvp_step * p_norm;

    const double curvature = dot(p, hp);
    if (!(curvature > 0.0)) {
      out.direction = g;
      out.curvature_exit = true;
      return out;
    }
    const double alpha = rs / curvature;
    for (std::size_t i = 0; i < x.size(); ++i) {
      out.direction[i] += alpha * p[i];
      residual[i] -= alpha * hp[i];
    }
    const double rs_next = dot(residual, residual);
    if (rs_next <= 1e-30 * rs0) break;
    const double beta = rs_next / rs;
    for (std::size_t i = 0; i < x.size(); ++i) p[i] = residual[i] + beta * p[i];
    rs = rs_next;
  }
  return out;
}

AttackOutcome fgsm(const Network& net, const Tensor& x, std::size_t label, double epsilon) {
  check_epsilon(epsilon);
  check_sample(net, x, label);
  const auto start = Clock::now();
  const Tensor g = input_gradient(net, x, label);
  Tensor adversarial = apply_perturbation(x, signed_step(g, epsilon));
  return finish(net, x, label, std::move(adversarial), 1, seconds_since(start));
}

AttackOutcome thundernna(const Network& net, const Tensor& x, std::size_t label,
                         double epsilon, double tau) {
  check_epsilon(epsilon);
  check_sample(net, x, label);
  if (!(tau >= 0.0)) throw InvalidArgument("tau must be >= 0");
  const auto start = Clock::now();
  const Tensor g = input_gradient(net, x, label);
  Tensor adversarial = apply_perturbation(x, thundernna_delta(g, epsilon, tau));
  return finish(net, x, label, std::move(adversarial), 1, seconds_since(start));
}

AttackOutcome pgd(const Network& net, const Tensor& x, std::size_t label, double epsilon,
                  int steps, double step_size, bool random_start, std::uint64_t seed) {
  check_epsilon(epsilon);
  check_sample(net, x, label);
  if (steps < 1) throw InvalidArgument("steps must be >= 1");
  if (!(step_size > 0.0)) throw InvalidArgument("step size must be > 0");
  const auto start = Clock::now();

  Tensor current = x;
  if (random_start) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> noise(-epsilon, epsilon);
    for (double& v : current.data()) v = clamp01(v + noise(rng));
  }
  for (int t = 0; t < steps; ++t) {
    const Tensor g = input_gradient(net, current, label);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double stepped = current[i] + step_size * sign(g[i]);
      current[i] = clamp01(std::clamp(stepped, x[i] - epsilon, x[i] + epsilon));
    }
  }
  return finish(net, x, label, std::move(current), steps, seconds_since(start));
}

AttackOutcome newton2(const Network& net, const Tensor& x, std::size_t label,
                      double epsilon, int cg_iters, double hvp_step) {
  check_epsilon(epsilon);
  check_sample(net, x, label);
  const auto start = Clock::now();

  const Tensor g = input_gradient(net, x, label);
  const GradientFn grad = [&](const Tensor& at) { return input_gradient(net, at, label); };
  const NewtonDirection nd = newton_cg_direction(grad, x, g, cg_iters, hvp_step);
  const int evals = 1 + nd.grad_evals;

  const double scale = linf_norm(nd.direction.data());
  if (scale == 0.0) {
    Tensor adversarial = apply_perturbation(x, signed_step(g, epsilon));
    AttackOutcome out = finish(net, x, label, std::move(adversarial), evals, seconds_since(start));
    out.fallback = true;
    return out;
  }
  // Ascent: the Newton update with its sign flipped, normalized to the budget.
  Tensor delta(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) delta[i] = epsilon * (nd.direction[i] / scale);
  Tensor adversarial = apply_perturbation(x, delta);
  return finish(net, x, label, std::move(adversarial), evals, seconds_since(start));
}

AttackOutcome run_attack(const AttackSpec& spec, const Network& net, const Tensor& x,
                         std::size_t label) {
  spec.validate();
  switch (spec.kind) {
    case AttackKind::kThundernna:
      return thundernna(net, x, label, spec.epsilon, spec.zero_grad_threshold);
    case AttackKind::kFgsm:
      return fgsm(net, x, label, spec.epsilon);
    case AttackKind::kPgd:
      return pgd(net, x, label, spec.epsilon, spec.steps, spec.effective_step_size(),
                 spec.random_start, spec.seed);
    case AttackKind::kNewton2:
      return newton2(net, x, label, spec.epsilon, spec.cg_iters, spec.effective_hvp_step(x));
  }
  throw InvalidArgument("unknown attack kind");
}

}  // namespace thundernna
