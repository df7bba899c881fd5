#ifndef SRRL_REWARD_HPP_
#define SRRL_REWARD_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "srrl/core.hpp"
#include "srrl/policy.hpp"

namespace srrl {

// Which rubrics a noisy grader's flips may touch, by sign of their points.
enum class RubricScope { kAll, kPositive, kNegative };

std::string_view to_string(RubricScope scope);
RubricScope rubric_scope_from_string(std::string_view name);

struct GraderSpec {
  GraderKind kind = GraderKind::kOracle;
  // Noisy only. fp: an unmet rubric is judged met; fn: a met rubric is judged unmet.
  double flip_prob_fp = 0.0;
  double flip_prob_fn = 0.0;
  RubricScope fp_scope = RubricScope::kAll;
  RubricScope fn_scope = RubricScope::kAll;
  // Self / snapshot-self only.
  double grading_temperature = 1.0;

  void validate() const;
};

Verdict grade_oracle(const Rollout& rollout, const Rubric& rubric);

Verdict grade_noisy(const Rollout& rollout, const Rubric& rubric, const GraderSpec& spec,
                    std::uint64_t seed);

// The judge sequence is
//   [JUDGE] prompt [SEP] response-content [SEP] | kind-token argument...
// The part left of `|` is pooled as the policy prompt; the rubric encoding is
// fed as the response prefix so its tokens land in the recent-token window.
// The verdict is the next token.
struct JudgeQuery {
  TokenSeq context;
  TokenSeq rubric_tokens;
};

TokenSeq encode_rubric(const Vocabulary& vocab, const Rubric& rubric);
JudgeQuery make_judge_query(const Vocabulary& vocab, std::span<const Token> prompt,
                            const Rollout& rollout, const Rubric& rubric);

// Samples one verdict token from the snapshot; met iff it is the MET token.
Verdict grade_self(const PolicySnapshot& snapshot, std::span<const Token> prompt,
                   const Rollout& rollout, const Rubric& rubric, double grading_temperature,
                   std::uint64_t seed, GraderKind tag = GraderKind::kSelf);

// Gap between the largest and second-largest judge logits for this query.
double judge_logit_margin(const PolicyParams& params, const JudgeQuery& query);

// clip(sum of met points / sum of positive points, 0, 1). Verdicts must be
// aligned with rubrics position by position and carry matching ids.
double reward_score(std::span<const Verdict> verdicts, std::span<const Rubric> rubrics);

// Unclipped ratio, exposed for diagnostics of the clipping region.
double raw_reward_ratio(std::span<const Verdict> verdicts, std::span<const Rubric> rubrics);

enum class GradingBackend { kColocated, kSimulatedRemote };

struct GradingOptions {
  int workers = 1;
  GradingBackend backend = GradingBackend::kColocated;
  // Added to every call in simulated-remote mode, in seconds.
  double injected_latency = 0.0;
};

// A grader is a spec plus, for self kinds, the snapshot that judges.
struct Grader {
  GraderSpec spec;
  std::optional<PolicySnapshot> snapshot;
};

struct GradeRequest {
  std::span<const Token> prompt;
  const Rollout* rollout = nullptr;
  const Rubric* rubric = nullptr;
  std::uint64_t seed = 0;
};

struct BatchGradeResult {
  std::vector<Verdict> verdicts;     // request order
  std::vector<double> elapsed;       // seconds per call, includes injected latency
  double injected_latency_total = 0.0;
};

Verdict grade_one(const Grader& grader, const GradeRequest& request);

// Grades every request; results are indexed by request, independent of how
// the work was scheduled across workers.
BatchGradeResult grade_batch(std::span<const GradeRequest> requests, const Grader& grader,
                             const GradingOptions& options = {});

}  // namespace srrl

#endif  // SRRL_REWARD_HPP_
