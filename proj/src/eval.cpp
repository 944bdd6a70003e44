#include "thundernna/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include "thundernna/autodiff.hpp"
#include "thundernna/errors.hpp"

namespace thundernna {

std::string_view to_string(Architecture arch) {
  return arch == Architecture::kMlpSmall ? "mlp-small" : "cnn-small";
}

Architecture parse_architecture(std::string_view name) {
  if (name == "mlp-small") return Architecture::kMlpSmall;
  if (name == "cnn-small") return Architecture::kCnnSmall;
  throw InvalidArgument("unknown architecture '" + std::string(name) + "'");
}

Network make_network(Architecture arch, const Shape& input_shape, std::size_t num_classes,
                     std::uint64_t seed) {
  std::vector<Layer> layers;
  if (arch == Architecture::kMlpSmall) {
    layers.push_back(Layer::dense(shape_size(input_shape), 64));
    layers.push_back(Layer::relu());
    layers.push_back(Layer::dense(64, num_classes));
  } else {
    if (input_shape.size() != 3 || input_shape[1] < 3 || input_shape[2] < 3) {
      throw ShapeError("cnn-small needs a [C,H,W] input with H,W >= 3, got " +
                       to_string(input_shape));
    }
    const std::size_t filters = 4;
    layers.push_back(Layer::conv2d(input_shape[0], filters, 3, 3));
    layers.push_back(Layer::relu());
    layers.push_back(Layer::dense(filters * (input_shape[1] - 2) * (input_shape[2] - 2), 32));
    layers.push_back(Layer::relu());
    layers.push_back(Layer::dense(32, num_classes));
  }
  Network net(input_shape, std::move(layers), num_classes);
  std::mt19937_64 rng(seed);
  initialize_parameters(net, rng);
  return net;
}

std::vector<std::size_t> predict_all(const Network& net, const Dataset& data) {
  std::vector<std::size_t> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = predict(net, data.sample_data(i));
  return out;
}

double accuracy(const Network& net, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  const auto predictions = predict_all(net, data);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) correct += predictions[i] == data.labels[i];
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

namespace {

Network fit(const TrainConfig& config, const Dataset& data) {
  if (data.size() == 0) throw InvalidArgument("training set is empty");
  if (config.batch_size == 0) throw InvalidArgument("batch size must be positive");
  if (!(config.learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");

  Network net = make_network(config.arch, data.sample_shape(), data.num_classes, config.seed);
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t d = data.sample_size();

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t n = std::min(config.batch_size, order.size() - start);
      Shape shape{n};
      const Shape sample = data.sample_shape();
      shape.insert(shape.end(), sample.begin(), sample.end());
      Tensor batch(std::move(shape));
      std::vector<std::size_t> labels(n);
      for (std::size_t j = 0; j < n; ++j) {
        const auto src = data.sample_data(order[start + j]);
        std::copy(src.begin(), src.end(), batch.data().begin() + j * d);
        labels[j] = data.labels[order[start + j]];
      }
      Gradients g = loss_and_gradients(net, batch, labels, true, false);
      if (!std::isfinite(g.loss)) {
        throw DivergenceError("training loss became non-finite in epoch " +
                              std::to_string(epoch));
      }
      net = sgd_step(std::move(net), g.params, config.learning_rate);
    }
  }
  return net;
}

}  // namespace

TrainResult train(const TrainConfig& config, const Dataset& train_set) {
  Network net = fit(config, train_set);
  const double acc = accuracy(net, train_set);
  return {std::move(net), acc, acc};
}

TrainResult train(const TrainConfig& config, const Dataset& train_set,
                  const Dataset& test_set) {
  Network net = fit(config, train_set);
  const double train_acc = accuracy(net, train_set);
  const double test_acc = accuracy(net, test_set);
  return {std::move(net), train_acc, test_acc};
}

EvalReport run_sweep(const Network& net, const Dataset& data,
                     const std::vector<AttackSpec>& specs, const std::vector<double>& budgets,
                     const SweepOptions& options) {
  for (double b : budgets) {
    if (!(b > 0.0 && b <= 1.0)) throw InvalidArgument("budgets must lie in (0, 1]");
  }
  EvalReport report;
  report.n_samples = data.size();
  const auto predictions = predict_all(net, data);
  std::vector<std::size_t> attacked;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (predictions[i] == data.labels[i]) attacked.push_back(i);
  }
  report.clean_accuracy =
      data.size() ? static_cast<double>(attacked.size()) / static_cast<double>(data.size()) : 0.0;

  const std::size_t threads = std::max<std::size_t>(1, options.threads);
  struct Pending {
    std::size_t row;
    std::vector<AttackOutcome> outcomes;
  };
  std::vector<Pending> pending;

  for (const auto& base : specs) {
    for (double budget : budgets) {
      AttackSpec spec = base;
      spec.epsilon = budget;
      spec.validate();

      std::vector<AttackOutcome> outcomes(attacked.size());
      std::exception_ptr failure;
      std::size_t failed_at = 0;
      std::mutex failure_mutex;
      auto work = [&](std::size_t worker) {
        for (std::size_t j = worker; j < attacked.size(); j += threads) {
          const std::size_t idx = attacked[j];
          try {
            outcomes[j] = run_attack(spec, net, data.sample(idx), data.labels[idx]);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure || idx < failed_at) {
              failure = std::current_exception();
              failed_at = idx;
            }
            return;
          }
        }
      };
      if (threads == 1) {
        work(0);
      } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(work, w);
      }
      if (failure) {
        try {
          std::rethrow_exception(failure);
        } catch (const std::exception& e) {
          throw Error(std::string(to_string(spec.kind)) + " attack failed on sample " +
                      std::to_string(failed_at) + ": " + e.what());
        }
      }

      ReportRow row;
      row.attack = spec.kind;
      row.budget = budget;
      row.n_attacked = attacked.size();
      double linf = 0.0, l2 = 0.0, seconds = 0.0, evals = 0.0;
      for (const auto& o : outcomes) {
        row.successes += o.success.value_or(false) ? 1 : 0;
        linf += o.linf_norm;
        l2 += o.l2_norm;
        seconds += o.elapsed;
        evals += o.grad_evals;
      }
      if (row.n_attacked > 0) {
        const double n = static_cast<double>(row.n_attacked);
        row.success_rate = static_cast<double>(row.successes) / n;
        row.mean_linf = linf / n;
        row.mean_l2 = l2 / n;
        row.seconds_per_50 = seconds / n * 50.0;
        row.grad_evals_per_image = evals / n;
      }
      report.rows.push_back(row);
      if (options.on_outcome) pending.push_back({report.rows.size() - 1, std::move(outcomes)});
    }
  }
  if (options.on_outcome) {
    for (const auto& p : pending) {
      for (std::size_t j = 0; j < p.outcomes.size(); ++j) {
        options.on_outcome(report.rows[p.row], attacked[j], p.outcomes[j]);
      }
    }
  }
  return report;
}

std::vector<TimingResult> benchmark_timing(const Network& net, const Dataset& data,
                                           const std::vector<AttackSpec>& specs,
                                           std::size_t batch, std::size_t repeats) {
  if (batch == 0 || data.size() < batch) {
    throw InvalidArgument("benchmark needs at least " + std::to_string(batch) + " samples");
  }
  if (repeats == 0) throw InvalidArgument("repeats must be positive");
  std::vector<Tensor> inputs;
  for (std::size_t i = 0; i < batch; ++i) inputs.push_back(data.sample(i));

  std::vector<TimingResult> results;
  for (const auto& spec : specs) {
    spec.validate();
    std::size_t evals = 0;
    auto pass = [&] {
      evals = 0;
      const auto start = std::chrono::steady_clock::now();
      for (std::size_t i = 0; i < batch; ++i) {
        evals += static_cast<std::size_t>(run_attack(spec, net, inputs[i], data.labels[i]).grad_evals);
      }
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    pass();  // warm-up
    std::vector<double> times;
    for (std::size_t r = 0; r < repeats; ++r) times.push_back(pass());
    std::sort(times.begin(), times.end());
    const double median = repeats % 2 ? times[repeats / 2]
                                      : 0.5 * (times[repeats / 2 - 1] + times[repeats / 2]);
    results.push_back({spec.kind, median,
                       static_cast<double>(evals) / static_cast<double>(batch)});
  }
  return results;
}

std::vector<AttackSpec> default_attack_specs(double epsilon) {
  std::vector<AttackSpec> specs;
  for (auto kind : {AttackKind::kThundernna, AttackKind::kFgsm, AttackKind::kPgd,
                    AttackKind::kNewton2}) {
    AttackSpec s;
    s.kind = kind;
    s.epsilon = epsilon;
    specs.push_back(s);
  }
  return specs;
}

}  // namespace thundernna
