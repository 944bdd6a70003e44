// Command-line entry point: train victims, run attacks, sweeps, timing
// benchmarks, and the derivation / gradient self-checks.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "thundernna/attacks.hpp"
#include "thundernna/autodiff.hpp"
#include "thundernna/data_io.hpp"
#include "thundernna/errors.hpp"
#include "thundernna/eval.hpp"
#include "thundernna/gradcheck.hpp"
#include "thundernna/theory.hpp"

namespace {

using namespace thundernna;
using json = nlohmann::json;

struct DataOptions {
  std::string data = "synth";
  std::string labels;
  std::size_t synth_n = 500;
  std::size_t synth_side = 28;
  std::size_t synth_classes = 10;
  double synth_spread = 0.3;
  std::uint64_t data_seed = 2;
};

void add_data_options(CLI::App* cmd, DataOptions& opts) {
  cmd->add_option("--data", opts.data, "'synth' or path to an IDX image file");
  cmd->add_option("--labels", opts.labels, "IDX label file (required with an IDX --data)");
  cmd->add_option("--synth-n", opts.synth_n, "synthetic sample count")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--synth-side", opts.synth_side, "synthetic image side length")
      ->check(CLI::Range(std::size_t{3}, std::size_t{256}));
  cmd->add_option("--synth-classes", opts.synth_classes, "synthetic class count")
      ->check(CLI::Range(std::size_t{2}, std::size_t{255}));
  cmd->add_option("--synth-spread", opts.synth_spread, "synthetic cluster std-dev")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--data-seed", opts.data_seed, "seed for synthetic data");
}

Dataset load_data(const DataOptions& opts, std::uint64_t seed, std::size_t n) {
  if (opts.data == "synth") {
    return synth_blobs(seed, n, {1, opts.synth_side, opts.synth_side}, opts.synth_classes,
                       opts.synth_spread);
  }
  if (opts.labels.empty()) throw InvalidArgument("--labels is required with an IDX --data");
  return read_idx(opts.data, opts.labels);
}

Dataset load_data(const DataOptions& opts) {
  return load_data(opts, opts.data_seed, opts.synth_n);
}

const CLI::Validator kBudget =
    CLI::Validator(
        [](std::string& s) -> std::string {
          double v = 0.0;
          try {
            std::size_t pos = 0;
            v = std::stod(s, &pos);
            if (pos != s.size()) return "not a number: " + s;
          } catch (const std::exception&) {
            return "not a number: " + s;
          }
          if (!(v > 0.0 && v <= 1.0)) return "budget must lie in (0, 1], got " + s;
          return {};
        },
        "BUDGET in (0,1]");

const CLI::Validator kMethod = CLI::IsMember({"thundernna", "fgsm", "pgd", "newton2"});

struct AttackOptions {
  int steps = 8;
  std::optional<double> alpha;
  double tau = 1e-12;
  int cg_iters = 5;
  std::optional<double> hvp_step;
  bool random_start = false;
  std::uint64_t seed = 0;
};

void add_attack_options(CLI::App* cmd, AttackOptions& opts) {
  cmd->add_option("--steps", opts.steps, "pgd step count k")->check(CLI::PositiveNumber);
  cmd->add_option("--alpha", opts.alpha, "pgd step size (default 2.5*eps/steps)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--tau", opts.tau, "thundernna zero-gradient threshold")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--cg-iters", opts.cg_iters, "newton2 conjugate-gradient iterations")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--hvp-step", opts.hvp_step,
                  "newton2 finite-difference HVP step (default 1e-3*(1+|x|_inf))")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--random-start", opts.random_start, "pgd uniform random start");
  cmd->add_option("--seed", opts.seed, "attack seed");
}

AttackSpec make_spec(AttackKind kind, double eps, const AttackOptions& opts) {
  AttackSpec s;
  s.kind = kind;
  s.epsilon = eps;
  s.steps = opts.steps;
  s.step_size = opts.alpha;
  s.zero_grad_threshold = opts.tau;
  s.cg_iters = opts.cg_iters;
  s.hvp_step = opts.hvp_step;
  s.random_start = opts.random_start;
  s.seed = opts.seed;
  return s;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

int cmd_train(const DataOptions& data_opts, const TrainConfig& config,
              const std::string& out_path) {
  TrainResult result = [&] {
    if (data_opts.data == "synth") {
      const Dataset train_set = load_data(data_opts);
      const Dataset test_set = load_data(data_opts, data_opts.data_seed + 1,
                                         std::max<std::size_t>(1, data_opts.synth_n / 4));
      return train(config, train_set, test_set);
    }
    return train(config, load_data(data_opts));
  }();
  save_model(result.net, out_path);
  std::cerr << "saved " << to_string(config.arch) << " with " << result.net.param_count()
            << " parameters to " << out_path << "\n";
  json j{{"arch", to_string(config.arch)},
         {"epochs", config.epochs},
         {"train_accuracy", result.train_accuracy},
         {"test_accuracy", result.test_accuracy},
         {"model", out_path}};
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_attack(const std::string& model_path, const DataOptions& data_opts,
               const AttackSpec& spec, std::size_t index) {
  const Network net = load_model(model_path);
  const Dataset data = load_data(data_opts);
  if (index >= data.size()) {
    throw InvalidArgument("--index " + std::to_string(index) + " out of range for " +
                          std::to_string(data.size()) + " samples");
  }
  const AttackOutcome out = run_attack(spec, net, data.sample(index), data.labels[index]);
  json j{{"method", to_string(spec.kind)},
         {"epsilon", spec.epsilon},
         {"index", index},
         {"label", data.labels[index]},
         {"clean_prediction", out.clean_prediction},
         {"adversarial_prediction", out.adversarial_prediction},
         {"success", out.success ? json(*out.success) : json("not-applicable")},
         {"linf_norm", out.linf_norm},
         {"l2_norm", out.l2_norm},
         {"elapsed", out.elapsed},
         {"grad_evals", out.grad_evals},
         {"fallback", out.fallback}};
  std::cout << j.dump() << "\n";
  return 0;
}

std::vector<AttackKind> parse_methods(const std::vector<std::string>& names) {
  std::vector<AttackKind> kinds;
  for (const auto& n : names) kinds.push_back(parse_attack_kind(n));
  return kinds;
}

void summarize_sweep(const EvalReport& report, const std::vector<double>& budgets) {
  std::cerr << "clean accuracy " << fixed6(report.clean_accuracy) << " over "
            << report.n_samples << " samples\n";
  std::map<AttackKind, std::vector<const ReportRow*>> by_attack;
  for (const auto& row : report.rows) by_attack[row.attack].push_back(&row);
  for (const auto& [kind, rows] : by_attack) {
    std::cerr << to_string(kind) << ":";
    for (const auto* r : rows) std::cerr << " " << r->budget << "->" << fixed6(r->success_rate);
    std::cerr << "\n";
  }
  if (by_attack.count(AttackKind::kThundernna) && budgets.size() > 1) {
    const auto& rows = by_attack[AttackKind::kThundernna];
    std::size_t drops = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      drops += rows[i]->success_rate < rows[i - 1]->success_rate;
    }
    std::cerr << "thundernna success rate decreases between " << drops << " of "
              << rows.size() - 1 << " consecutive budgets\n";
  }
  if (by_attack.count(AttackKind::kThundernna) && by_attack.count(AttackKind::kFgsm)) {
    const auto& t = by_attack[AttackKind::kThundernna];
    const auto& f = by_attack[AttackKind::kFgsm];
    std::size_t above = 0;
    for (std::size_t i = 0; i < std::min(t.size(), f.size()); ++i) {
      above += t[i]->success_rate > f[i]->success_rate;
    }
    std::cerr << "thundernna beats fgsm at " << above << " of " << t.size() << " budgets\n";
  }
}

int cmd_sweep(const std::string& model_path, const DataOptions& data_opts,
              const std::vector<std::string>& methods, const std::vector<double>& budgets,
              const AttackOptions& attack_opts, std::size_t limit, std::size_t threads,
              bool no_timing, const std::string& out_path, const std::string& dump_dir) {
  const Network net = load_model(model_path);
  Dataset data = load_data(data_opts);
  if (limit > 0) data = data.head(limit);

  std::vector<AttackSpec> specs;
  for (auto kind : parse_methods(methods)) specs.push_back(make_spec(kind, 1.0, attack_opts));

  SweepOptions options;
  options.threads = threads;
  struct Dump {
    std::vector<double> pixels;
    std::vector<std::size_t> labels;
  };
  std::map<std::pair<AttackKind, double>, Dump> dumps;
  if (!dump_dir.empty()) {
    std::filesystem::create_directories(dump_dir);
    options.on_outcome = [&](const ReportRow& row, std::size_t idx, const AttackOutcome& o) {
      auto& d = dumps[{row.attack, row.budget}];
      d.labels.push_back(data.labels[idx]);
      d.pixels.insert(d.pixels.end(), o.adversarial.values().begin(),
                      o.adversarial.values().end());
    };
  }

  const EvalReport report = run_sweep(net, data, specs, budgets, options);
  write_csv_report(report, out_path, !no_timing);
  for (auto& [key, d] : dumps) {
    Shape shape{d.labels.size()};
    const auto s = data.sample_shape();
    shape.insert(shape.end(), s.begin(), s.end());
    const Dataset adversarial{Tensor(std::move(shape), std::move(d.pixels)),
                              std::move(d.labels), data.num_classes};
    const std::string stem = std::string(to_string(key.first)) + "_eps" + fixed6(key.second);
    write_idx(adversarial, std::filesystem::path(dump_dir) / (stem + "-images.idx"),
              std::filesystem::path(dump_dir) / (stem + "-labels.idx"));
  }
  summarize_sweep(report, budgets);
  std::cerr << "wrote " << report.rows.size() << " rows to " << out_path << "\n";
  return 0;
}

int cmd_bench(const std::string& model_path, const DataOptions& data_opts,
              const std::vector<std::string>& methods, double eps,
              const AttackOptions& attack_opts, std::size_t batch, std::size_t repeats) {
  const Network net = load_model(model_path);
  const Dataset data = load_data(data_opts);
  std::vector<AttackSpec> specs;
  for (auto kind : parse_methods(methods)) specs.push_back(make_spec(kind, eps, attack_opts));
  const auto results = benchmark_timing(net, data, specs, batch, repeats);

  std::optional<double> fgsm_time;
  for (const auto& r : results) {
    if (r.attack == AttackKind::kFgsm) fgsm_time = r.seconds_per_batch;
  }
  std::cout << "attack,seconds_per_" << batch << ",grad_evals_per_image,ratio_to_fgsm\n";
  for (const auto& r : results) {
    std::cout << to_string(r.attack) << "," << fixed6(r.seconds_per_batch) << ","
              << fixed6(r.grad_evals_per_image) << ","
              << (fgsm_time && *fgsm_time > 0.0 ? fixed6(r.seconds_per_batch / *fgsm_time)
                                                : std::string("nan"))
              << "\n";
  }
  return 0;
}

int cmd_check_theory() {
  const auto rows = theory::run_theory_checks();
  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  bool ok = true;
  for (const auto& r : rows) {
    std::cout << std::string(theory::to_string(r.status)) << std::string(12 - theory::to_string(r.status).size(), ' ')
              << r.name << std::string(width - r.name.size() + 2, ' ') << "expected "
              << r.expected << " | observed " << r.observed << "\n";
    ok = ok && r.status != theory::CheckStatus::kFail;
  }
  return ok ? 0 : 1;
}

int cmd_gradcheck(const GradcheckOptions& opts) {
  const GradcheckReport r = run_gradcheck(opts);
  std::cout << "trials " << r.trials << ", coordinates " << r.coordinates
            << ", input failures " << r.input_failures << ", param failures "
            << r.param_failures << ", max relative error " << r.max_relative_error
            << ", max absolute error " << r.max_absolute_error << "\n"
            << (r.passed() ? "PASS" : "FAIL") << "\n";
  return r.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"White-box L-inf adversarial attacks: thundernna, fgsm, pgd, newton2"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "train a desk-scale victim model");
  DataOptions train_data;
  train_data.synth_n = 2000;
  train_data.data_seed = 1;
  TrainConfig config;
  std::string arch = "mlp-small";
  std::string train_out;
  add_data_options(train_cmd, train_data);
  train_cmd->add_option("--arch", arch, "architecture")
      ->check(CLI::IsMember({"mlp-small", "cnn-small"}));
  train_cmd->add_option("--epochs", config.epochs, "training epochs");
  train_cmd->add_option("--lr", config.learning_rate, "SGD learning rate")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch-size", config.batch_size, "minibatch size")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", config.seed, "initialization and shuffling seed");
  train_cmd->add_option("--out", train_out, "output model file (.thnk)")->required();
  train_cmd->footer("synthetic data: the held-out split uses --data-seed + 1 and synth-n/4 samples");

  // attack
  auto* attack_cmd = app.add_subcommand("attack", "attack one sample and print the outcome");
  DataOptions attack_data;
  AttackOptions attack_opts;
  std::string attack_model, method;
  double attack_eps = 0.0;
  std::size_t index = 0;
  attack_cmd->add_option("--model", attack_model, "model file")->required();
  add_data_options(attack_cmd, attack_data);
  attack_cmd->add_option("--method", method, "attack")->required()->check(kMethod);
  attack_cmd->add_option("--eps", attack_eps, "L-inf budget in (0,1]")
      ->required()
      ->check(kBudget);
  attack_cmd->add_option("--index", index, "sample index");
  add_attack_options(attack_cmd, attack_opts);

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "success rate per attack and budget");
  DataOptions sweep_data;
  AttackOptions sweep_attack;
  std::string sweep_model, sweep_out, dump_dir;
  std::vector<std::string> sweep_methods{"thundernna", "fgsm", "pgd", "newton2"};
  std::vector<double> budgets{0.1, 0.2, 0.3, 0.4, 0.5};
  std::size_t limit = 0, threads = 1;
  bool no_timing = false;
  sweep_cmd->add_option("--model", sweep_model, "model file")->required();
  add_data_options(sweep_cmd, sweep_data);
  sweep_cmd->add_option("--methods", sweep_methods, "attacks")->delimiter(',')->check(kMethod);
  sweep_cmd->add_option("--budgets", budgets, "L-inf budgets")->delimiter(',')->check(kBudget);
  sweep_cmd->add_option("--limit", limit, "use only the first N samples (0 = all)");
  sweep_cmd->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  sweep_cmd->add_flag("--no-timing", no_timing, "leave seconds_per_50 empty (byte-stable CSV)");
  sweep_cmd->add_option("--out", sweep_out, "CSV report path")->required();
  sweep_cmd->add_option("--dump-dir", dump_dir, "write adversarial examples as IDX here");
  add_attack_options(sweep_cmd, sweep_attack);

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "wall-clock seconds per batch of images");
  DataOptions bench_data;
  AttackOptions bench_attack;
  std::string bench_model;
  std::vector<std::string> bench_methods{"thundernna", "fgsm", "pgd", "newton2"};
  double bench_eps = 0.3;
  std::size_t batch = 50, repeats = 5;
  bench_cmd->add_option("--model", bench_model, "model file")->required();
  add_data_options(bench_cmd, bench_data);
  bench_cmd->add_option("--methods", bench_methods, "attacks")->delimiter(',')->check(kMethod);
  bench_cmd->add_option("--eps", bench_eps, "L-inf budget")->check(kBudget);
  bench_cmd->add_option("--batch", batch, "images per timed batch")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--repeats", repeats, "timed repeats (median reported)")
      ->check(CLI::PositiveNumber);
  add_attack_options(bench_cmd, bench_attack);

  // check-theory
  auto* theory_cmd = app.add_subcommand("check-theory", "verify the Newton / antiderivative derivations");

  // gradcheck
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient check on random nets");
  GradcheckOptions grad_opts;
  grad_cmd->add_option("--seed", grad_opts.seed, "seed");
  grad_cmd->add_option("--trials", grad_opts.trials, "random networks")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*train_cmd) {
      config.arch = parse_architecture(arch);
      return cmd_train(train_data, config, train_out);
    }
    if (*attack_cmd) {
      return cmd_attack(attack_model, attack_data,
                        make_spec(parse_attack_kind(method), attack_eps, attack_opts), index);
    }
    if (*sweep_cmd) {
      return cmd_sweep(sweep_model, sweep_data, sweep_methods, budgets, sweep_attack, limit,
                       threads, no_timing, sweep_out, dump_dir);
    }
    if (*bench_cmd) {
      return cmd_bench(bench_model, bench_data, bench_methods, bench_eps, bench_attack, batch,
                       repeats);
    }
    if (*theory_cmd) return cmd_check_theory();
    if (*grad_cmd) return cmd_gradcheck(grad_opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
