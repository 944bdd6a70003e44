#ifndef THUNDERNNA_NETWORK_HPP
#define THUNDERNNA_NETWORK_HPP

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "thundernna/tensor.hpp"

namespace thundernna {

enum class LayerKind : std::uint8_t { kDense = 0, kConv2d = 1, kRelu = 2 };

std::string_view to_string(LayerKind kind);

/// One stage of a feed-forward classifier.
///
/// dense:  weight out x in, bias out. Accepts any input whose element count
///         is `in` (so it also flattens conv feature maps).
/// conv2d: weight out_channels x in_channels x kh x kw, bias out_channels.
///         Stride 1, no padding (cross-correlation, "valid").
/// relu:   no parameters.
struct Layer {
  LayerKind kind = LayerKind::kRelu;
  Tensor weight;
  Tensor bias;

  static Layer dense(std::size_t in, std::size_t out);
  static Layer conv2d(std::size_t in_channels, std::size_t out_channels,
                      std::size_t kernel_h, std::size_t kernel_w);
  static Layer relu();

  std::size_t param_count() const { return weight.size() + bias.size(); }

  /// Output shape for `input`; throws ShapeError when incompatible.
  Shape output_shape(const Shape& input) const;

  friend bool operator==(const Layer&, const Layer&) = default;
};

/// Ordered stack of layers with a fixed per-sample input shape.
///
/// Construction validates that consecutive layer shapes compose and that
/// the final layer emits exactly `num_classes` logits. A Network is not
/// mutated by inference or attacks, so one instance can be shared across
/// threads for concurrent forward/gradient calls.
class Network {
 public:
  Network(Shape input_shape, std::vector<Layer> layers, std::size_t num_classes);

  const Shape& input_shape() const { return input_shape_; }
  std::size_t input_size() const { return shape_size(input_shape_); }
  std::size_t num_classes() const { return num_classes_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::size_t param_count() const;

  /// Shape fed into layer `i`; index layers().size() gives the logits shape.
  const Shape& activation_shape(std::size_t i) const { return shapes_[i]; }

  /// Mutable parameter access for training. Shapes may not change.
  Tensor& weight(std::size_t layer) { return layers_.at(layer).weight; }
  Tensor& bias(std::size_t layer) { return layers_.at(layer).bias; }

  friend bool operator==(const Network& a, const Network& b) {
    return a.input_shape_ == b.input_shape_ && a.num_classes_ == b.num_classes_ &&
           a.layers_ == b.layers_;
  }

 private:
  Shape input_shape_;
  std::vector<Layer> layers_;
  std::size_t num_classes_;
  std::vector<Shape> shapes_;
};

/// He-style initialization: weights ~ N(0, 2/fan_in), biases zero.
void initialize_parameters(Network& net, std::mt19937_64& rng);

}  // namespace thundernna

#endif  // THUNDERNNA_NETWORK_HPP
