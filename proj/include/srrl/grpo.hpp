#ifndef SRRL_GRPO_HPP_
#define SRRL_GRPO_HPP_

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "srrl/core.hpp"
#include "srrl/policy.hpp"
#include "srrl/reward.hpp"

namespace srrl {

inline constexpr double kDegenerateStd = 1e-8;

// Scores standardized within their group with the population standard
// deviation. Groups whose std falls below kDegenerateStd get exact zeros and
// the degenerate flag.
GroupScores group_advantages(std::span<const double> scores);

// Ratio bounds [1 - low, 1 + high]; infinity disables a side.
struct ClipRange {
  double low = 0.2;
  double high = 0.28;

  static ClipRange unclipped() {
    return {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  }
};

struct TokenStats {
  double ratio = 1.0;
  double advantage = 0.0;
  bool clipped = false;  // the clip branch won the min, so no gradient flows
};

// One rollout with the prompt it answered and its (token-constant) advantage.
struct SurrogateSample {
  TokenSeq prompt;
  Rollout rollout;
  double advantage = 0.0;
};

struct ObjectiveResult {
  double value = 0.0;
  PolicyGradient gradient;
  std::vector<TokenStats> tokens;  // flattened in sample order
  std::size_t token_count = 0;
  double clip_fraction = 0.0;
};

// Token-level clipped surrogate
//   (1 / sum |o_i|) sum_i sum_t min(w A, clip(w, 1 - low, 1 + high) A),
// w = exp(logprob_live - old_logprob), and its exact gradient with A and the
// old log-probabilities held constant. No KL term.
ObjectiveResult grpo_objective(const PolicyParams& live, std::span<const SurrogateSample> samples,
                               ClipRange clip);

struct StepReport {
  std::int64_t step = 0;
  double mean_reward = 0.0;          // as assigned by the training grader
  double oracle_mean_reward = 0.0;   // same rollouts, oracle verdicts
  double mean_response_length = 0.0;
  double objective = 0.0;            // surrogate value at the first inner iteration
  double clip_fraction = 0.0;        // over all inner iterations
  int degenerate_groups = 0;
  int resampled_groups = 0;
  double step_time = 0.0;            // seconds, wall clock
  double reward_time = 0.0;          // seconds spent grading and scoring
  double injected_latency = 0.0;     // synthetic part of reward_time
  double alignment_loss = 0.0;       // mean over interleaved alignment steps, 0 if none

  // Everything except the wall-clock fields.
  bool same_outcome(const StepReport& other) const;
};

struct TrainerState {
  PolicyParams live;
  PolicyParams velocity;  // momentum buffer, zeros when momentum is off
  std::int64_t step = 0;

  explicit TrainerState(PolicyParams init)
      : live(std::move(init)), velocity(live.dims()) {}
};

struct GradedRollout {
  std::size_t task_index = 0;  // into the step's batch (or resample pool entries appended after it)
  Rollout rollout;
  std::vector<Verdict> verdicts;
  std::vector<std::uint64_t> grade_seeds;
  std::vector<double> grade_elapsed;
  double score = 0.0;
  double advantage = 0.0;
};

// What one step saw; filled only when requested.
struct StepTrace {
  std::optional<PolicySnapshot> snapshot;
  std::vector<Task> tasks;
  std::vector<GradedRollout> rollouts;
};

struct StepOptions {
  GradingOptions grading;
  // Tasks for dynamic sampling; ignored unless config.dynamic_sampling.
  std::span<const Task> resample_pool;
  StepTrace* trace = nullptr;
};

std::uint64_t rollout_seed(std::uint64_t run_seed, std::int64_t step, std::size_t slot,
                           const std::string& task_id, int group_index);
std::uint64_t grading_seed(std::uint64_t run_seed, std::int64_t step, const std::string& task_id,
                           int group_index, const std::string& rubric_id);

// One iteration of the training loop: snapshot, sample, grade with the
// snapshot (for self graders, at config.grading_temperature), score,
// standardize, then `inner_iterations` ascent steps on the clipped surrogate.
StepReport train_step(TrainerState& state, std::span<const Task> batch, const TrainerConfig& config,
                      const GraderSpec& grader, const StepOptions& options = {});

// Cross-entropy arm. Tokens of `completion` before `scored_from` are
// teacher-forced context only.
struct SftExample {
  TokenSeq prompt;
  TokenSeq completion;
  std::size_t scored_from = 0;
};

// Grading-alignment updates mixed into RL: after every step,
// `steps_per_rl_step` cross-entropy steps on minibatches drawn with
// replacement from `examples`. Keeps a self grader calibrated while the shared
// parameters move.
struct AlignmentMix {
  std::span<const SftExample> examples;
  int steps_per_rl_step = 0;
  int batch_size = 64;
  double learning_rate = 0.5;
};

struct TrainOptions {
  GradingOptions grading;
  AlignmentMix alignment;
  int checkpoint_every = 0;  // 0: only initial and final
  std::function<void(const StepReport&)> on_step;
  // Called with the completed step count and the live parameters.
  std::function<void(std::int64_t steps_done, const PolicyParams&)> after_step;
  std::function<void(std::int64_t step, const PolicyParams&)> on_checkpoint;
  std::function<void(std::int64_t step, const StepTrace&)> on_trace;
};

struct TrainResult {
  PolicyParams params;
  std::vector<StepReport> reports;
};

// epochs x steps_per_epoch train_steps; each epoch draws batches from a fresh
// seeded permutation of the tasks, wrapping around when a batch runs past it.
TrainResult train(const PolicyParams& init, std::span<const Task> tasks,
                  const TrainerConfig& config, const GraderSpec& grader,
                  const TrainOptions& options = {});

struct SftResult {
  PolicyParams params;
  double loss = 0.0;  // mean per-token NLL before the update
};

// Mean per-token negative log-likelihood over the batch and its gradient
// (of the loss, not the log-likelihood).
double sft_loss(const PolicyParams& params, std::span<const SftExample> batch,
                PolicyGradient* gradient = nullptr);

SftResult sft_step(const PolicyParams& live, std::span<const SftExample> batch,
                   double learning_rate);

// Ideal completion followed by the end token (unless already at max length).
std::vector<SftExample> sft_examples(std::span<const Task> tasks, const Vocabulary& vocab,
                                     int max_response_length);

}  // namespace srrl

#endif  // SRRL_GRPO_HPP_
