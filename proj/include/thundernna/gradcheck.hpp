#ifndef THUNDERNNA_GRADCHECK_HPP
#define THUNDERNNA_GRADCHECK_HPP

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

#include "thundernna/autodiff.hpp"
#include "thundernna/network.hpp"
#include "thundernna/tensor.hpp"

namespace thundernna {

// Central-difference oracles. These only call forward() and softmax_nll(),
// never the reverse pass, so they stay independent of what they check.

/// (L(x + h e_i) - L(x - h e_i)) / 2h for every input coordinate.
Tensor finite_diff_gradient(const Network& net, const Tensor& x, std::size_t label,
                            double step);

/// Same difference quotient over every weight and bias.
ParamGradients finite_diff_param_gradients(const Network& net, const Tensor& x,
                                           std::size_t label, double step);

/// |a - b| <= max(rel_tol * max(|a|, |b|), abs_floor).
bool gradients_agree(double analytic, double numeric, double rel_tol, double abs_floor);

/// Smallest |pre-activation| entering any relu layer for this sample.
/// Finite differences are only meaningful when this exceeds the step.
double relu_margin(const Network& net, std::span<const double> sample);

/// Small dense or conv classifier with at most `max_params` parameters and
/// randomly drawn weights and biases.
Network random_network(std::mt19937_64& rng, std::size_t max_params);

struct GradcheckOptions {
  std::uint64_t seed = 0;
  std::size_t trials = 100;
  double step = 1e-4;
  double rel_tol = 1e-4;
  double abs_floor = 1e-6;
  std::size_t max_params = 5000;
  double min_relu_margin = 1e-3;
};

struct GradcheckReport {
  std::size_t trials = 0;
  std::size_t coordinates = 0;
  std::size_t input_failures = 0;
  std::size_t param_failures = 0;
  // Largest |a - b| / max(|a|, |b|) among coordinates whose magnitude
  // exceeds the absolute floor.
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;

  bool passed() const { return input_failures == 0 && param_failures == 0; }
};

/// Compare input_gradient and param_gradients against the finite-difference
/// oracles on `trials` random (network, input, label) triples.
GradcheckReport run_gradcheck(const GradcheckOptions& options);

}  // namespace thundernna

#endif  // THUNDERNNA_GRADCHECK_HPP
