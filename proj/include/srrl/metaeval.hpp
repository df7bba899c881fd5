#ifndef SRRL_METAEVAL_HPP_
#define SRRL_METAEVAL_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "srrl/core.hpp"
#include "srrl/policy.hpp"
#include "srrl/reward.hpp"

namespace srrl {

struct ClassStats {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetaEvalResult {
  double macro_f1 = 0.0;
  ClassStats met;
  ClassStats unmet;
  std::size_t n_judgments = 0;
  GraderKind grader_kind = GraderKind::kOracle;
  double grading_temperature = 0.0;
  // Set when the labels hold only one class; the missing class scores 0.
  bool single_class = false;
};

// Unweighted mean of the met and unmet F1 scores; 0/0 counts as 0.
MetaEvalResult macro_f1(const std::vector<bool>& predictions, const std::vector<bool>& labels);

// Grades every pair with `grader` and scores its verdicts against the stored
// oracle labels. For self kinds `grading_temperature` replaces the spec's.
MetaEvalResult meta_eval_grader(const Grader& grader, std::span<const ScoringExample> eval_set,
                                double grading_temperature, std::uint64_t seed, int workers = 1);

// One snapshot-self evaluation per temperature over the shared eval set.
std::vector<MetaEvalResult> temperature_sweep(const PolicySnapshot& snapshot,
                                              std::span<const ScoringExample> eval_set,
                                              std::span<const double> temperatures,
                                              std::uint64_t seed, int workers = 1);

// Smallest top-vs-runner-up judge logit gap over the eval set.
double min_judge_margin(const PolicyParams& params, std::span<const ScoringExample> eval_set);

// Scales the output layer so that every judge query in `eval_set` has a logit
// margin of at least `target_margin`. Argmax verdicts are unchanged. Throws
// NumericError if some query has an exact tie.
PolicyParams sharpen_judge(const PolicyParams& params, std::span<const ScoringExample> eval_set,
                           double target_margin);

}  // namespace srrl

#endif  // SRRL_METAEVAL_HPP_
