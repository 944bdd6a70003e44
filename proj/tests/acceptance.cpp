// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. Criteria 6-8 drive the CLI binary end to end.

#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "thundernna/attacks.hpp"
#include "thundernna/autodiff.hpp"
#include "thundernna/data_io.hpp"
#include "thundernna/eval.hpp"
#include "thundernna/gradcheck.hpp"
#include "thundernna/theory.hpp"

using namespace thundernna;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

struct Result {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, const std::function<Result()>& body) {
  const auto start = Clock::now();
  Result r;
  try {
    r = body();
  } catch (const std::exception& e) {
    r = {false, std::string("exception: ") + e.what()};
  }
  std::printf("[%s] %d. %s (%.1fs): %s\n", r.pass ? "PASS" : "FAIL", id, name.c_str(),
              seconds_since(start), r.detail.c_str());
  std::fflush(stdout);
  failures += r.pass ? 0 : 1;
}

struct Run {
  int code = -1;
  std::string out;
};

Run run_cli(const std::string& args) {
  const std::string cmd = std::string(THUNDERNNA_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    rows.push_back(std::move(fields));
  }
  return rows;
}

std::string fmt(const char* pattern, double a) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a);
  return buf;
}

Tensor random_pixels(const Shape& shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor x(shape);
  for (double& v : x.data()) v = u(rng);
  return x;
}

const double kBudgets[] = {0.1, 0.2, 0.3, 0.4, 0.5};

// Desk-scale setup shared by criteria 6-8: 28x28 synthetic blobs, 10 classes.
const std::string kSynth = "--synth-side 28 --synth-classes 10 --synth-spread 0.3";
const std::size_t kEvalN = 500;
const std::uint64_t kEvalSeed = 2;

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / "thundernna_acceptance";
  fs::create_directories(work);
  const std::string model = (work / "victim.thnk").string();

  criterion(1, "gradient oracle", [] {
    const auto start = Clock::now();
    GradcheckOptions opts;
    opts.seed = 20240601;
    opts.trials = 100;
    const GradcheckReport r = run_gradcheck(opts);
    const double elapsed = seconds_since(start);
    std::ostringstream d;
    d << r.trials << " nets, " << r.coordinates << " coordinates, input failures "
      << r.input_failures << ", param failures " << r.param_failures
      << ", max rel err " << r.max_relative_error << ", max abs err " << r.max_absolute_error;
    return Result{r.passed() && r.trials == 100 && elapsed < 60.0, d.str()};
  });

  criterion(2, "budget invariant", [] {
    const auto start = Clock::now();
    std::mt19937_64 rng(77);
    const AttackKind kinds[] = {AttackKind::kThundernna, AttackKind::kFgsm, AttackKind::kPgd,
                                AttackKind::kNewton2};
    std::size_t trials = 0, violations = 0;
    double worst_excess = -1.0;
    for (int i = 0; i < 1200; ++i) {
      const Network net = random_network(rng, 5000);
      const Tensor x = random_pixels(net.input_shape(), rng);
      AttackSpec spec;
      spec.kind = kinds[i % 4];
      spec.epsilon = kBudgets[(i / 4) % 5];
      spec.random_start = (i / 20) % 2 == 1;
      spec.seed = static_cast<std::uint64_t>(i);
      const std::size_t label = rng() % net.num_classes();
      const AttackOutcome o = run_attack(spec, net, x, label);
      const double linf = linf_distance(o.adversarial.data(), x.data());
      worst_excess = std::max(worst_excess, linf - spec.epsilon);
      bool ok = linf <= spec.epsilon + 1e-12 && o.linf_norm <= spec.epsilon + 1e-12;
      for (double v : o.adversarial.data()) ok = ok && v >= 0.0 && v <= 1.0;
      violations += ok ? 0 : 1;
      ++trials;
    }
    const double elapsed = seconds_since(start);
    std::ostringstream d;
    d << trials << " attacks, " << violations << " violations, max(|delta|_inf - eps) = "
      << worst_excess;
    return Result{violations == 0 && trials >= 1000 && elapsed < 60.0, d.str()};
  });

  criterion(3, "pgd(k=1, alpha=eps) == fgsm", [] {
    std::mt19937_64 rng(31);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const Network net = random_network(rng, 5000);
      const Tensor x = random_pixels(net.input_shape(), rng);
      const double eps = kBudgets[i % 5];
      const std::size_t label = rng() % net.num_classes();
      const auto p = pgd(net, x, label, eps, 1, eps, false, 0);
      const auto f = fgsm(net, x, label, eps);
      worst = std::max(worst, linf_distance(p.adversarial.data(), f.adversarial.data()));
    }
    return Result{worst <= 1e-12, fmt("100 cases, max coordinate difference %.3e", worst)};
  });

  criterion(4, "thundernna formula law", [] {
    std::mt19937_64 rng(41);
    std::normal_distribution<double> logmag(0.0, 4.0);
    std::uniform_real_distribution<double> eps_dist(1e-3, 1.0);
    std::size_t coords = 0, bad = 0;
    auto check = [&](const Tensor& g, double eps, double tau) {
      const Tensor d = thundernna_delta(g, eps, tau);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (std::abs(g[i]) <= tau) {
          bad += d[i] != 0.0;
          continue;
        }
        ++coords;
        const bool magnitude = std::abs(d[i]) == std::min(eps, 1.0 / std::abs(g[i]));
        const bool sign = (d[i] > 0.0) == (g[i] > 0.0);
        bad += magnitude && sign ? 0 : 1;
      }
    };
    for (int i = 0; i < 500; ++i) {
      Tensor g({50});
      for (double& v : g.data()) v = (rng() % 2 ? 1.0 : -1.0) * std::exp(logmag(rng));
      check(g, eps_dist(rng), i % 2 ? 1e-12 : 1e-3);
    }
    // Real input gradients, too.
    for (int i = 0; i < 100; ++i) {
      const Network net = random_network(rng, 5000);
      const Tensor x = random_pixels(net.input_shape(), rng);
      check(input_gradient(net, x, rng() % net.num_classes()), kBudgets[i % 5], 1e-12);
    }
    std::ostringstream d;
    d << coords << " coordinates with |g| > tau, " << bad << " violations";
    return Result{bad == 0 && coords > 0, d.str()};
  });

  criterion(5, "theory checks", [] {
    const double integral = theory::numeric_integral_neglog(1e-8, 1.0);
    const auto convex = theory::convexity_check(theory::claimed_antiderivative, 0.01, 10.0, 1000);
    bool discrepancy_reports_concave = false;
    bool any_fail = false;
    for (const auto& row : theory::run_theory_checks()) {
      any_fail = any_fail || row.status == theory::CheckStatus::kFail;
      if (row.status == theory::CheckStatus::kDiscrepancy) {
        discrepancy_reports_concave = row.observed.find("concave") != std::string::npos;
      }
    }
    const auto literal = theory::convexity_check(theory::neglog_limit_value, 0.01, 10.0, 1000);
    std::ostringstream d;
    d << "int_0^1 -log = " << fmt("%.9f", integral) << ", t log t - t convex = " << convex.convex
      << ", t - t log t convex = " << literal.convex
      << ", discrepancy row reports concave = " << discrepancy_reports_concave;
    return Result{std::abs(integral - 1.0) <= 1e-5 && convex.convex && !literal.convex &&
                      discrepancy_reports_concave && !any_fail,
                  d.str()};
  });

  const fs::path csv_a = work / "sweep_a.csv";
  const fs::path csv_b = work / "sweep_b.csv";
  const std::string eval_data =
      kSynth + " --synth-n " + std::to_string(kEvalN) + " --data-seed " + std::to_string(kEvalSeed);

  criterion(6, "scaled ordering (pgd >= fgsm - 2pp)", [&] {
    const auto start = Clock::now();
    const Run trained = run_cli("train " + kSynth +
                                " --synth-n 2000 --data-seed 1 --arch mlp-small --epochs 10"
                                " --lr 0.05 --seed 1 --out " + model);
    if (trained.code != 0) return Result{false, "train exited " + std::to_string(trained.code)};
    const Network net = load_model(model);
    const Dataset eval = synth_blobs(kEvalSeed, kEvalN, {1, 28, 28}, 10, 0.3);
    const double clean = accuracy(net, eval);

    const Run swept = run_cli("sweep --model " + model + " " + eval_data +
                              " --budgets 0.1,0.2,0.3,0.4,0.5 --no-timing --out " +
                              csv_a.string());
    if (swept.code != 0) return Result{false, "sweep exited " + std::to_string(swept.code)};
    std::map<std::string, std::vector<double>> rate;
    for (const auto& row : parse_csv(slurp(csv_a))) {
      if (row.size() >= 4 && row[0] != "attack") rate[row[0]].push_back(std::stod(row[3]));
    }
    bool ordered = rate["pgd"].size() == 5 && rate["fgsm"].size() == 5;
    std::ostringstream d;
    d << "clean accuracy " << clean << "; success pgd/fgsm/thundernna/newton2 per budget:";
    std::size_t thundernna_above = 0, thundernna_drops = 0;
    for (std::size_t i = 0; ordered && i < 5; ++i) {
      ordered = ordered && rate["pgd"][i] >= rate["fgsm"][i] - 0.02;
      d << " " << kBudgets[i] << ":" << rate["pgd"][i] << "/" << rate["fgsm"][i] << "/"
        << rate["thundernna"][i] << "/" << rate["newton2"][i];
      thundernna_above += rate["thundernna"][i] > rate["fgsm"][i];
      if (i > 0) thundernna_drops += rate["thundernna"][i] < rate["thundernna"][i - 1];
    }
    d << "; recorded: thundernna > fgsm at " << thundernna_above
      << "/5 budgets, thundernna decreases at " << thundernna_drops << "/4 budget steps";
    return Result{clean >= 0.95 && ordered && seconds_since(start) < 600.0, d.str()};
  });

  criterion(7, "cost accounting", [&] {
    const Run bench = run_cli("bench --model " + model + " " + eval_data +
                              " --batch 50 --repeats 5 --eps 0.3");
    if (bench.code != 0) return Result{false, "bench exited " + std::to_string(bench.code)};
    std::map<std::string, std::pair<double, double>> rows;  // seconds, evals
    for (const auto& row : parse_csv(bench.out)) {
      if (row.size() >= 3 && row[0] != "attack") {
        rows[row[0]] = {std::stod(row[1]), std::stod(row[2])};
      }
    }
    if (rows.size() != 4) return Result{false, "bench printed " + std::to_string(rows.size()) + " rows"};
    const double fgsm_t = rows["fgsm"].first;
    const double pgd_ratio = rows["pgd"].first / fgsm_t;
    const double thd_ratio = rows["thundernna"].first / fgsm_t;
    const bool evals = rows["fgsm"].second == 1.0 && rows["thundernna"].second == 1.0 &&
                       rows["pgd"].second == 8.0 && rows["newton2"].second <= 6.0;
    std::ostringstream d;
    d << "grad evals/image fgsm " << rows["fgsm"].second << ", thundernna "
      << rows["thundernna"].second << ", pgd " << rows["pgd"].second << ", newton2 "
      << rows["newton2"].second << "; s/50 fgsm " << fgsm_t << ", thundernna "
      << rows["thundernna"].first << ", pgd " << rows["pgd"].first << ", newton2 "
      << rows["newton2"].first << "; pgd/fgsm " << pgd_ratio << ", thundernna/fgsm "
      << thd_ratio << ", newton2/fgsm " << rows["newton2"].first / fgsm_t;
    return Result{evals && pgd_ratio >= 3.0 && thd_ratio >= 0.5 && thd_ratio <= 2.5, d.str()};
  });

  criterion(8, "persistence and report round-trips", [&] {
    std::ostringstream d;
    // Model: load, save, reload.
    const Network net = load_model(model);
    const fs::path copy = work / "victim_copy.thnk";
    save_model(net, copy);
    const bool model_ok = load_model(copy) == net && slurp(copy) == slurp(model);
    d << "model bitwise round-trip " << model_ok;

    // CSV fields recompute from raw outcomes.
    const Dataset eval = synth_blobs(kEvalSeed, 100, {1, 28, 28}, 10, 0.3);
    std::map<std::pair<int, double>, std::pair<std::size_t, std::size_t>> raw;
    SweepOptions opts;
    opts.on_outcome = [&](const ReportRow& row, std::size_t, const AttackOutcome& o) {
      auto& [succ, n] = raw[{static_cast<int>(row.attack), row.budget}];
      succ += o.success.value_or(false);
      ++n;
    };
    const std::vector<double> budgets(std::begin(kBudgets), std::end(kBudgets));
    const EvalReport report = run_sweep(net, eval, default_attack_specs(), budgets, opts);
    bool recompute = report.rows.size() == 20;
    for (const auto& row : report.rows) {
      const auto [succ, n] = raw[{static_cast<int>(row.attack), row.budget}];
      recompute = recompute && n == row.n_attacked &&
                  row.success_rate == static_cast<double>(succ) / static_cast<double>(n);
    }
    const auto parsed = parse_csv(format_csv_report(report));
    for (std::size_t i = 0; recompute && i < report.rows.size(); ++i) {
      recompute = parsed[i + 1][3] == fmt("%.6f", report.rows[i].success_rate);
    }
    d << ", csv recomputation " << recompute;

    // Golden: a second seeded sweep is byte-identical.
    const Run again = run_cli("sweep --model " + model + " " + eval_data +
                              " --budgets 0.1,0.2,0.3,0.4,0.5 --no-timing --out " +
                              csv_b.string());
    const std::string a = slurp(csv_a), b = slurp(csv_b);
    std::size_t lines = 0;
    for (char c : a) lines += c == '\n';
    const bool golden = again.code == 0 && !a.empty() && a == b && lines == 21;
    d << ", sweep csv byte-identical " << golden << " (" << lines << " lines)";
    return Result{model_ok && recompute && golden, d.str()};
  });

  std::printf("%s: %d criteria failed\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
