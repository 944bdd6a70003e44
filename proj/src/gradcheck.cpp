#include "thundernna/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "thundernna/errors.hpp"

namespace thundernna {
namespace {

double loss_at(const Network& net, const Tensor& x, std::size_t label) {
  return softmax_nll(forward(net, x), label);
}

double central_difference(const Network& net, const Tensor& x, std::size_t label,
                          double& slot, double step) {
  const double saved = slot;
  slot = saved + step;
  const double plus = loss_at(net, x, label);
  slot = saved - step;
  const double minus = loss_at(net, x, label);
  slot = saved;
  return (plus - minus) / (2.0 * step);
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

}  // namespace

Tensor finite_diff_gradient(const Network& net, const Tensor& x, std::size_t label,
                            double step) {
  if (!(step > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  if (batch_size(net, x) != 1) throw ShapeError("finite_diff_gradient takes one sample");
  Tensor probe = x;
  Tensor grad(x.shape());
  for (std::size_t i = 0; i < probe.size(); ++i) {
    grad[i] = central_difference(net, probe, label, probe[i], step);
  }
  return grad;
}

ParamGradients finite_diff_param_gradients(const Network& net, const Tensor& x,
                                           std::size_t label, double step) {
  if (!(step > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  Network probe = net;
  ParamGradients grads;
  for (std::size_t li = 0; li < net.layers().size(); ++li) {
    LayerGradient g{Tensor(net.layers()[li].weight.shape()),
                    Tensor(net.layers()[li].bias.shape())};
    for (std::size_t j = 0; j < g.weight.size(); ++j) {
      g.weight[j] = central_difference(probe, x, label, probe.weight(li)[j], step);
    }
    for (std::size_t j = 0; j < g.bias.size(); ++j) {
      g.bias[j] = central_difference(probe, x, label, probe.bias(li)[j], step);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

bool gradients_agree(double analytic, double numeric, double rel_tol, double abs_floor) {
  const double diff = std::abs(analytic - numeric);
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  return diff <= std::max(rel_tol * scale, abs_floor);
}

double relu_margin(const Network& net, std::span<const double> sample) {
  const auto acts = forward_trace(net, sample);
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    if (net.layers()[i].kind != LayerKind::kRelu) continue;
    for (double v : acts[i]) margin = std::min(margin, std::abs(v));
  }
  return margin;
}

Network random_network(std::mt19937_64& rng, std::size_t max_params) {
  for (;;) {
    const std::size_t classes = uniform_index(rng, 2, 5);
    std::vector<Layer> layers;
    Shape input;
    if (uniform_index(rng, 0, 1) == 0) {
      const std::size_t d = uniform_index(rng, 2, 12);
      input = {d};
      std::size_t width = d;
      const std::size_t hidden_layers = uniform_index(rng, 0, 2);
      for (std::size_t h = 0; h < hidden_layers; ++h) {
        const std::size_t next = uniform_index(rng, 2, 16);
        layers.push_back(Layer::dense(width, next));
        layers.push_back(Layer::relu());
        width = next;
      }
      layers.push_back(Layer::dense(width, classes));
    } else {
      const std::size_t c = uniform_index(rng, 1, 2);
      const std::size_t h = uniform_index(rng, 4, 6);
      const std::size_t w = uniform_index(rng, 4, 6);
      const std::size_t k = uniform_index(rng, 2, 3);
      const std::size_t oc = uniform_index(rng, 1, 3);
      input = {c, h, w};
      layers.push_back(Layer::conv2d(c, oc, k, k));
      layers.push_back(Layer::relu());
      layers.push_back(Layer::dense(oc * (h - k + 1) * (w - k + 1), classes));
    }
    Network net(std::move(input), std::move(layers), classes);
    if (net.param_count() > max_params) continue;
    initialize_parameters(net, rng);
    std::normal_distribution<double> bias(0.0, 0.1);
    for (std::size_t i = 0; i < net.layers().size(); ++i) {
      for (double& b : net.bias(i).data()) b = bias(rng);
    }
    return net;
  }
}

GradcheckReport run_gradcheck(const GradcheckOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> pixel(0.0, 1.0);
  GradcheckReport report;

  auto record = [&](double a, double n) -> bool {
    ++report.coordinates;
    const double diff = std::abs(a - n);
    report.max_absolute_error = std::max(report.max_absolute_error, diff);
    const double scale = std::max(std::abs(a), std::abs(n));
    if (scale > options.abs_floor) {
      report.max_relative_error = std::max(report.max_relative_error, diff / scale);
    }
    return gradients_agree(a, n, options.rel_tol, options.abs_floor);
  };

  while (report.trials < options.trials) {
    const Network net = random_network(rng, options.max_params);
    Tensor x(net.input_shape());
    bool smooth = false;
    for (int attempt = 0; attempt < 100 && !smooth; ++attempt) {
      for (double& v : x.data()) v = pixel(rng);
      smooth = relu_margin(net, x.data()) > options.min_relu_margin;
    }
    if (!smooth) continue;
    const std::size_t label = uniform_index(rng, 0, net.num_classes() - 1);

    const Tensor g = input_gradient(net, x, label);
    const Tensor g_fd = finite_diff_gradient(net, x, label, options.step);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!record(g[i], g_fd[i])) ++report.input_failures;
    }

    const ParamGradients pg = param_gradients(net, x, label);
    const ParamGradients pg_fd = finite_diff_param_gradients(net, x, label, options.step);
    for (std::size_t li = 0; li < pg.size(); ++li) {
      for (std::size_t j = 0; j < pg[li].weight.size(); ++j) {
        if (!record(pg[li].weight[j], pg_fd[li].weight[j])) ++report.param_failures;
      }
      for (std::size_t j = 0; j < pg[li].bias.size(); ++j) {
        if (!record(pg[li].bias[j], pg_fd[li].bias[j])) ++report.param_failures;
      }
    }
    ++report.trials;
  }
  return report;
}

}  // namespace thundernna
