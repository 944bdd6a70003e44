#ifndef THUNDERNNA_EVAL_HPP
#define THUNDERNNA_EVAL_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "thundernna/attacks.hpp"
#include "thundernna/data_io.hpp"
#include "thundernna/network.hpp"
#include "thundernna/report.hpp"

namespace thundernna {

enum class Architecture { kMlpSmall, kCnnSmall };

std::string_view to_string(Architecture arch);
Architecture parse_architecture(std::string_view name);

/// mlp-small: dense(64) relu dense(classes).
/// cnn-small: conv2d(4 filters, 3x3) relu dense(32) relu dense(classes);
/// needs a [C, H, W] input with H, W >= 3.
Network make_network(Architecture arch, const Shape& input_shape, std::size_t num_classes,
                     std::uint64_t seed);

struct TrainConfig {
  std::size_t epochs = 10;
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  Architecture arch = Architecture::kMlpSmall;
};

struct TrainResult {
  Network net;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;  // equals train_accuracy when no test set is given
};

/// Minibatch SGD on the mean softmax-NLL. Initialization and shuffling are
/// seeded from config.seed, so the result is deterministic. Throws
/// DivergenceError when the loss becomes non-finite.
TrainResult train(const TrainConfig& config, const Dataset& train_set);
TrainResult train(const TrainConfig& config, const Dataset& train_set, const Dataset& test_set);

std::vector<std::size_t> predict_all(const Network& net, const Dataset& data);
double accuracy(const Network& net, const Dataset& data);

struct SweepOptions {
  std::size_t threads = 1;
  /// Called once per attacked sample, in (row, sample) order, after the
  /// sweep finishes.
  std::function<void(const ReportRow& row, std::size_t sample, const AttackOutcome&)> on_outcome;
};

/// For every spec (attack-major) and budget, attacks each clean-correct
/// sample with spec.epsilon replaced by the budget and aggregates a row.
/// Per-sample attacks may run on `threads` workers; aggregation order is
/// fixed, so everything except timing is deterministic.
EvalReport run_sweep(const Network& net, const Dataset& data,
                     const std::vector<AttackSpec>& specs, const std::vector<double>& budgets,
                     const SweepOptions& options = {});

struct TimingResult {
  AttackKind attack = AttackKind::kFgsm;
  double seconds_per_batch = 0.0;
  double grad_evals_per_image = 0.0;
};

/// Median over `repeats` of the wall time to attack the first `batch`
/// samples with each spec, after one warm-up pass. Single-threaded.
std::vector<TimingResult> benchmark_timing(const Network& net, const Dataset& data,
                                           const std::vector<AttackSpec>& specs,
                                           std::size_t batch = 50, std::size_t repeats = 5);

/// The four attacks with their default hyperparameters at `epsilon`.
std::vector<AttackSpec> default_attack_specs(double epsilon = 0.3);

}  // namespace thundernna

#endif  // THUNDERNNA_EVAL_HPP
