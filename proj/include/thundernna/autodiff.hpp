#ifndef THUNDERNNA_AUTODIFF_HPP
#define THUNDERNNA_AUTODIFF_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "thundernna/network.hpp"
#include "thundernna/tensor.hpp"

namespace thundernna {

/// Number of samples in `x`: 1 when x.shape() == net.input_shape(), B when
/// x.shape() == [B, input_shape...]. Anything else is a ShapeError naming
/// layer 0.
std::size_t batch_size(const Network& net, const Tensor& x);

/// Logits for `x`: shape [num_classes] for a single sample, [B, num_classes]
/// for a batch.
Tensor forward(const Network& net, const Tensor& x);

/// Activations of one sample: element 0 is the input, element i + 1 the
/// output of layer i (pre-relu values are the outputs of the layer before a
/// relu).
std::vector<std::vector<double>> forward_trace(const Network& net,
                                               std::span<const double> sample);

/// Predicted class of a single sample.
std::size_t predict(const Network& net, std::span<const double> sample);

std::vector<double> softmax(std::span<const double> logits);

/// -log softmax(logits)[label], via log-sum-exp(logits) - logits[label].
double softmax_nll(std::span<const double> logits, std::size_t label);
double softmax_nll(const Tensor& logits, std::size_t label);

/// Mean softmax-NLL over the batch in `x`.
double mean_loss(const Network& net, const Tensor& x, std::span<const std::size_t> labels);

struct LayerGradient {
  Tensor weight;
  Tensor bias;

  friend bool operator==(const LayerGradient&, const LayerGradient&) = default;
};

/// One entry per layer, shaped like its parameters (empty for relu).
using ParamGradients = std::vector<LayerGradient>;

struct Gradients {
  double loss = 0.0;
  ParamGradients params;
  Tensor input;
};

/// Reverse pass of the mean loss. `params` / `input` are only filled when
/// requested.
Gradients loss_and_gradients(const Network& net, const Tensor& x,
                             std::span<const std::size_t> labels, bool want_params,
                             bool want_input);

/// d loss / d x, same shape as x.
Tensor input_gradient(const Network& net, const Tensor& x, std::size_t label);
Tensor input_gradient(const Network& net, const Tensor& x,
                      std::span<const std::size_t> labels);

ParamGradients param_gradients(const Network& net, const Tensor& x, std::size_t label);
ParamGradients param_gradients(const Network& net, const Tensor& x,
                               std::span<const std::size_t> labels);

/// p <- p - lr * grad(p) for every parameter. lr must be >= 0.
Network sgd_step(Network net, const ParamGradients& grads, double lr);

}  // namespace thundernna

#endif  // THUNDERNNA_AUTODIFF_HPP
