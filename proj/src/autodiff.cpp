#include "thundernna/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "thundernna/errors.hpp"

namespace thundernna {
namespace {

using Buffer = std::vector<double>;

void dense_forward(const Layer& layer, std::span<const double> in, Buffer& out) {
  const std::size_t n_out = layer.weight.shape()[0];
  const std::size_t n_in = layer.weight.shape()[1];
  const double* w = layer.weight.data().data();
  out.assign(layer.bias.values().begin(), layer.bias.values().end());
  for (std::size_t o = 0; o < n_out; ++o) {
    const double* row = w + o * n_in;
    double acc = 0.0;
    for (std::size_t i = 0; i < n_in; ++i) acc += row[i] * in[i];
    out[o] += acc;
  }
}

void conv_forward(const Layer& layer, const Shape& in_shape, std::span<const double> in,
                  Buffer& out) {
  const auto& ws = layer.weight.shape();
  const std::size_t oc = ws[0], ic = ws[1], kh = ws[2], kw = ws[3];
  const std::size_t h = in_shape[1], w = in_shape[2];
  const std::size_t oh = h - kh + 1, ow = w - kw + 1;
  const double* wt = layer.weight.data().data();
  out.assign(oc * oh * ow, 0.0);
  for (std::size_t o = 0; o < oc; ++o) {
    double* plane = out.data() + o * oh * ow;
    std::fill(plane, plane + oh * ow, layer.bias[o]);
    for (std::size_t c = 0; c < ic; ++c) {
      const double* src = in.data() + c * h * w;
      for (std::size_t ky = 0; ky < kh; ++ky) {
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const double k = wt[((o * ic + c) * kh + ky) * kw + kx];
          for (std::size_t y = 0; y < oh; ++y) {
            const double* row = src + (y + ky) * w + kx;
            double* dst = plane + y * ow;
            for (std::size_t x = 0; x < ow; ++x) dst[x] += k * row[x];
          }
        }
      }
    }
  }
}

void layer_forward(const Layer& layer, const Shape& in_shape, std::span<const double> in,
                   Buffer& out) {
  switch (layer.kind) {
    case LayerKind::kDense:
      dense_forward(layer, in, out);
      return;
    case LayerKind::kConv2d:
      conv_forward(layer, in_shape, in, out);
      return;
    case LayerKind::kRelu:
      out.resize(in.size());
      for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
      return;
  }
}

// Backward of one layer. `grad_out` is dL/d(output); fills `grad_in` when
// non-null and accumulates parameter gradients into `pg` when non-null.
void layer_backward(const Layer& layer, const Shape& in_shape, std::span<const double> in,
                    std::span<const double> grad_out, Buffer* grad_in, LayerGradient* pg) {
  switch (layer.kind) {
    case LayerKind::kRelu:
      if (grad_in) {
        grad_in->resize(in.size());
        for (std::size_t i = 0; i < in.size(); ++i) {
          (*grad_in)[i] = in[i] > 0.0 ? grad_out[i] : 0.0;
        }
      }
      return;
    case LayerKind::kDense: {
      const std::size_t n_out = layer.weight.shape()[0];
      const std::size_t n_in = layer.weight.shape()[1];
      const double* w = layer.weight.data().data();
      if (pg) {
        double* gw = pg->weight.data().data();
        for (std::size_t o = 0; o < n_out; ++o) {
          const double d = grad_out[o];
          pg->bias[o] += d;
          if (d == 0.0) continue;
          double* row = gw + o * n_in;
          for (std::size_t i = 0; i < n_in; ++i) row[i] += d * in[i];
        }
      }
      if (grad_in) {
        grad_in->assign(n_in, 0.0);
        for (std::size_t o = 0; o < n_out; ++o) {
          const double d = grad_out[o];
          if (d == 0.0) continue;
          const double* row = w + o * n_in;
          for (std::size_t i = 0; i < n_in; ++i) (*grad_in)[i] += d * row[i];
        }
      }
      return;
    }
    case LayerKind::kConv2d: {
      const auto& ws = layer.weight.shape();
      const std::size_t oc = ws[0], ic = ws[1], kh = ws[2], kw = ws[3];
      const std::size_t h = in_shape[1], w = in_shape[2];
      const std::size_t oh = h - kh + 1, ow = w - kw + 1;
      const double* wt = layer.weight.data().data();
      if (grad_in) grad_in->assign(in.size(), 0.0);
      for (std::size_t o = 0; o < oc; ++o) {
        const double* gplane = grad_out.data() + o * oh * ow;
        if (pg) {
          double s = 0.0;
          for (std::size_t j = 0; j < oh * ow; ++j) s += gplane[j];
          pg->bias[o] += s;
        }
        for (std::size_t c = 0; c < ic; ++c) {
          const double* src = in.data() + c * h * w;
          for (std::size_t ky = 0; ky < kh; ++ky) {
            for (std::size_t kx = 0; kx < kw; ++kx) {
              const std::size_t widx = ((o * ic + c) * kh + ky) * kw + kx;
              const double k = wt[widx];
              double acc = 0.0;
              for (std::size_t y = 0; y < oh; ++y) {
                const double* row = src + (y + ky) * w + kx;
                const double* g = gplane + y * ow;
                for (std::size_t x = 0; x < ow; ++x) acc += g[x] * row[x];
                if (grad_in) {
                  double* dst = grad_in->data() + c * h * w + (y + ky) * w + kx;
                  for (std::size_t x = 0; x < ow; ++x) dst[x] += k * g[x];
                }
              }
              if (pg) pg->weight[widx] += acc;
            }
          }
        }
      }
      return;
    }
  }
}

void check_labels(const Network& net, std::size_t batch,
                  std::span<const std::size_t> labels) {
  if (labels.size() != batch) {
    throw ShapeError("got " + std::to_string(labels.size()) + " labels for a batch of " +
                     std::to_string(batch));
  }
  for (std::size_t label : labels) {
    if (label >= net.num_classes()) {
      throw InvalidArgument("label " + std::to_string(label) + " out of range for " +
                            std::to_string(net.num_classes()) + " classes");
    }
  }
}

ParamGradients zero_param_gradients(const Network& net) {
  ParamGradients grads;
  grads.reserve(net.layers().size());
  for (const auto& layer : net.layers()) {
    grads.push_back({Tensor(layer.weight.shape()), Tensor(layer.bias.shape())});
  }
  return grads;
}

}  // namespace

std::size_t batch_size(const Network& net, const Tensor& x) {
  const Shape& in = net.input_shape();
  if (x.shape() == in) return 1;
  if (x.rank() == in.size() + 1 && x.shape()[0] > 0 &&
      std::equal(in.begin(), in.end(), x.shape().begin() + 1)) {
    return x.shape()[0];
  }
  throw ShapeError("layer 0 expects input shape " + to_string(in) +
                   " (optionally with a leading batch extent), got " + to_string(x.shape()));
}

std::vector<Buffer> forward_trace(const Network& net, std::span<const double> sample) {
  if (sample.size() != net.input_size()) {
    throw ShapeError("layer 0 expects " + std::to_string(net.input_size()) +
                     " input values, got " + std::to_string(sample.size()));
  }
  std::vector<Buffer> acts(net.layers().size() + 1);
  acts[0].assign(sample.begin(), sample.end());
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    layer_forward(net.layers()[i], net.activation_shape(i), acts[i], acts[i + 1]);
  }
  return acts;
}

Tensor forward(const Network& net, const Tensor& x) {
  const std::size_t batch = batch_size(net, x);
  const std::size_t d = net.input_size();
  const std::size_t c = net.num_classes();
  std::vector<double> logits(batch * c);
  Buffer a, b;
  for (std::size_t s = 0; s < batch; ++s) {
    a.assign(x.data().begin() + s * d, x.data().begin() + (s + 1) * d);
    for (std::size_t i = 0; i < net.layers().size(); ++i) {
      layer_forward(net.layers()[i], net.activation_shape(i), a, b);
      std::swap(a, b);
    }
    std::copy(a.begin(), a.end(), logits.begin() + s * c);
  }
  if (x.shape() == net.input_shape()) return Tensor({c}, std::move(logits));
  return Tensor({batch, c}, std::move(logits));
}

std::size_t predict(const Network& net, std::span<const double> sample) {
  const auto acts = forward_trace(net, sample);
  return argmax(acts.back());
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double m = *std::max_element(p.begin(), p.end());
  double total = 0.0;
  for (double& v : p) {
    v = std::exp(v - m);
    total += v;
  }
  for (double& v : p) v /= total;
  return p;
}

double softmax_nll(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size()) {
    throw InvalidArgument("label " + std::to_string(label) + " out of range for " +
                          std::to_string(logits.size()) + " logits");
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double v : logits) total += std::exp(v - m);
  const double loss = m + std::log(total) - logits[label];
  return loss < 0.0 ? 0.0 : loss;  // keeps NaN visible
}

double softmax_nll(const Tensor& logits, std::size_t label) {
  return softmax_nll(logits.data(), label);
}

double mean_loss(const Network& net, const Tensor& x, std::span<const std::size_t> labels) {
  const std::size_t batch = batch_size(net, x);
  check_labels(net, batch, labels);
  const Tensor logits = forward(net, x);
  const std::size_t c = net.num_classes();
  double total = 0.0;
  for (std::size_t s = 0; s < batch; ++s) {
    total += softmax_nll(logits.data().subspan(s * c, c), labels[s]);
  }
  return total / static_cast<double>(batch);
}

Gradients loss_and_gradients(const Network& net, const Tensor& x,
                             std::span<const std::size_t> labels, bool want_params,
                             bool want_input) {
  const std::size_t batch = batch_size(net, x);
  check_labels(net, batch, labels);
  const std::size_t d = net.input_size();
  const std::size_t n_layers = net.layers().size();
  const double scale = 1.0 / static_cast<double>(batch);

  Gradients out;
  if (want_params) out.params = zero_param_gradients(net);
  if (want_input) out.input = Tensor(x.shape());

  Buffer delta, next;
  for (std::size_t s = 0; s < batch; ++s) {
    const auto acts = forward_trace(net, x.data().subspan(s * d, d));
    const Buffer& logits = acts.back();
    out.loss += softmax_nll(logits, labels[s]) * scale;

    delta = softmax(logits);
    delta[labels[s]] -= 1.0;
    for (double& v : delta) v *= scale;

    for (std::size_t li = n_layers; li-- > 0;) {
      const bool need_grad_in = li > 0 || want_input;
      LayerGradient* pg = want_params ? &out.params[li] : nullptr;
      layer_backward(net.layers()[li], net.activation_shape(li), acts[li], delta,
                     need_grad_in ? &next : nullptr, pg);
      if (!need_grad_in) break;
      std::swap(delta, next);
    }
    if (want_input) {
      std::copy(delta.begin(), delta.end(), out.input.data().begin() + s * d);
    }
  }
  return out;
}

Tensor input_gradient(const Network& net, const Tensor& x, std::size_t label) {
  const std::size_t labels[] = {label};
  return input_gradient(net, x, labels);
}

Tensor input_gradient(const Network& net, const Tensor& x,
                      std::span<const std::size_t> labels) {
  return loss_and_gradients(net, x, labels, false, true).input;
}

ParamGradients param_gradients(const Network& net, const Tensor& x, std::size_t label) {
  const std::size_t labels[] = {label};
  return param_gradients(net, x, labels);
}

ParamGradients param_gradients(const Network& net, const Tensor& x,
                               std::span<const std::size_t> labels) {
  return loss_and_gradients(net, x, labels, true, false).params;
}

Network sgd_step(Network net, const ParamGradients& grads, double lr) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) {
    throw InvalidArgument("learning rate must be finite and non-negative");
  }
  if (grads.size() != net.layers().size()) {
    throw ShapeError("gradient list has " + std::to_string(grads.size()) +
                     " entries for " + std::to_string(net.layers().size()) + " layers");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].weight.shape() != net.layers()[i].weight.shape() ||
        grads[i].bias.shape() != net.layers()[i].bias.shape()) {
      throw ShapeError("layer " + std::to_string(i) + ": gradient shape mismatch");
    }
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    auto w = net.weight(i).data();
    auto b = net.bias(i).data();
    for (std::size_t j = 0; j < w.size(); ++j) w[j] -= lr * grads[i].weight[j];
    for (std::size_t j = 0; j < b.size(); ++j) b[j] -= lr * grads[i].bias[j];
  }
  return net;
}

}  // namespace thundernna
