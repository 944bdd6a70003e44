#include "thundernna/network.hpp"

#include <cmath>
#include <string>

#include "thundernna/errors.hpp"

namespace thundernna {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kDense:
      return "dense";
    case LayerKind::kConv2d:
      return "conv2d";
    case LayerKind::kRelu:
      return "relu";
  }
  return "unknown";
}

Layer Layer::dense(std::size_t in, std::size_t out) {
  if (in == 0 || out == 0) throw ShapeError("dense layer extents must be positive");
  return Layer{LayerKind::kDense, Tensor({out, in}), Tensor({out})};
}

Layer Layer::conv2d(std::size_t in_channels, std::size_t out_channels,
                    std::size_t kernel_h, std::size_t kernel_w) {
  if (in_channels == 0 || out_channels == 0 || kernel_h == 0 || kernel_w == 0) {
    throw ShapeError("conv2d layer extents must be positive");
  }
  return Layer{LayerKind::kConv2d,
               Tensor({out_channels, in_channels, kernel_h, kernel_w}),
               Tensor({out_channels})};
}

Layer Layer::relu() { return Layer{}; }

Shape Layer::output_shape(const Shape& input) const {
  switch (kind) {
    case LayerKind::kRelu:
      if (!weight.empty() || !bias.empty()) {
        throw ShapeError("relu layer must not carry parameters");
      }
      return input;
    case LayerKind::kDense: {
      if (weight.rank() != 2 || bias.shape() != Shape{weight.shape()[0]}) {
        throw ShapeError("dense weight/bias shapes inconsistent: weight " +
                         to_string(weight.shape()) + ", bias " + to_string(bias.shape()));
      }
      if (shape_size(input) != weight.shape()[1]) {
        throw ShapeError("dense layer expects " + std::to_string(weight.shape()[1]) +
                         " inputs, got shape " + to_string(input));
      }
      return Shape{weight.shape()[0]};
    }
    case LayerKind::kConv2d: {
      if (weight.rank() != 4 || bias.shape() != Shape{weight.shape()[0]}) {
        throw ShapeError("conv2d weight/bias shapes inconsistent: weight " +
                         to_string(weight.shape()) + ", bias " + to_string(bias.shape()));
      }
      const auto& w = weight.shape();
      if (input.size() != 3 || input[0] != w[1] || input[1] < w[2] || input[2] < w[3]) {
        throw ShapeError("conv2d with kernel " + to_string(w) +
                         " cannot consume input shape " + to_string(input));
      }
      return Shape{w[0], input[1] - w[2] + 1, input[2] - w[3] + 1};
    }
  }
  throw ShapeError("unknown layer kind");
}

Network::Network(Shape input_shape, std::vector<Layer> layers, std::size_t num_classes)
    : input_shape_(std::move(input_shape)),
      layers_(std::move(layers)),
      num_classes_(num_classes) {
  if (input_shape_.empty() || shape_size(input_shape_) == 0) {
    throw ShapeError("network input shape must be non-empty with positive extents");
  }
  if (num_classes_ == 0) throw ShapeError("network needs at least one class");
  shapes_.reserve(layers_.size() + 1);
  shapes_.push_back(input_shape_);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    try {
      shapes_.push_back(layers_[i].output_shape(shapes_.back()));
    } catch (const ShapeError& e) {
      throw ShapeError("layer " + std::to_string(i) + ": " + e.what());
    }
  }
  if (shapes_.back() != Shape{num_classes_}) {
    throw ShapeError("network output shape " + to_string(shapes_.back()) +
                     " does not match num_classes " + std::to_string(num_classes_));
  }
}

std::size_t Network::param_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.param_count();
  return n;
}

void initialize_parameters(Network& net, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    const Layer& layer = net.layers()[i];
    if (layer.kind == LayerKind::kRelu) continue;
    const std::size_t fan_in = layer.weight.size() / layer.weight.shape()[0];
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    for (double& w : net.weight(i).data()) w = dist(rng);
    for (double& b : net.bias(i).data()) b = 0.0;
  }
}

}  // namespace thundernna
