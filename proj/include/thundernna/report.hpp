#ifndef THUNDERNNA_REPORT_HPP
#define THUNDERNNA_REPORT_HPP

#include <cstddef>
#include <vector>

#include "thundernna/attacks.hpp"

namespace thundernna {

/// Aggregate over the clean-correct samples for one (attack, budget) pair.
struct ReportRow {
  AttackKind attack = AttackKind::kFgsm;
  double budget = 0.0;
  std::size_t n_attacked = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;
  double mean_linf = 0.0;
  double mean_l2 = 0.0;
  double seconds_per_50 = 0.0;
  double grad_evals_per_image = 0.0;
};

struct EvalReport {
  std::size_t n_samples = 0;
  double clean_accuracy = 0.0;
  std::vector<ReportRow> rows;  // attack-major, budgets in the order given
};

}  // namespace thundernna

#endif  // THUNDERNNA_REPORT_HPP
