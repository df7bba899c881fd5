#ifndef SRRL_TASKGEN_HPP_
#define SRRL_TASKGEN_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "srrl/core.hpp"
#include "srrl/grpo.hpp"
#include "srrl/policy.hpp"

namespace srrl {

// contains:    one positive contains-token rubric for a token repeated in the
//              prompt, plus negative rubrics on other tokens.
// length:      length window, optional prefix, a few penalized tokens.
// mixed:       every criterion kind, 10 to 12 rubrics per task by default.
// adversarial: mixed plus heavily negative and possibly contradictory rubrics;
//              tasks with no perfect response are kept and flagged.
enum class TaskFamily { kContains, kLength, kMixed, kAdversarial };

std::string_view to_string(TaskFamily family);
TaskFamily task_family_from_string(std::string_view name);

struct TaskGenOptions {
  TaskFamily family = TaskFamily::kContains;
  int count = 64;
  std::uint64_t seed = 0;
  int vocab_size = 32;
  int max_prompt_length = 16;
  int max_response_length = 8;
  // 0 selects the family default.
  int min_rubrics = 0;
  int max_rubrics = 0;
  // Probability that each secondary rubric is drawn from the family template
  // rather than replaced by an arbitrary one.
  double quality = 1.0;
};

// Throws ConfigError for contradictory knobs.
TaskSet generate_tasks(const TaskGenOptions& options);

// Brute-force search over response classes: which prefix rubric is honoured,
// which rubric-mentioned tokens appear, and the content length. Rubric
// outcomes depend only on these, so one representative per class is tried.
// Returns a content sequence scoring exactly 1, if one is found.
std::optional<TokenSeq> find_satisfying_response(const Task& task, const Vocabulary& vocab,
                                                 int max_response_length);

struct ScoringSet {
  std::vector<ScoringExample> examples;
  std::size_t met_count = 0;
  std::size_t unmet_count = 0;
};

// Rollouts sampled from `reference` over the tasks, one rubric per example,
// labelled by the oracle.
ScoringSet generate_scoring_set(std::span<const Task> tasks, const PolicyParams& reference,
                                int count, std::uint64_t seed, int max_response_length,
                                double temperature = 1.0);

// Subsamples the majority class so both labels occur equally often.
ScoringSet balance_scoring_set(const ScoringSet& set, std::uint64_t seed);

// Judge query as the teacher-forced prefix and the MET / UNMET token as the
// single scored target.
std::vector<SftExample> grading_alignment_examples(const Vocabulary& vocab,
                                                   std::span<const ScoringExample> examples);

// Responses sampled from `reference` on the task prompts, as cross-entropy
// targets. Mixed into grading alignment they hold the response distribution in
// place while the shared parameters learn to judge.
std::vector<SftExample> response_anchor_examples(std::span<const Task> tasks,
                                                 const PolicyParams& reference, int count,
                                                 std::uint64_t seed, int max_response_length);

struct AlignmentOptions {
  int scoring_set_size = 20000;  // before class balancing
  int steps = 20000;             // warm-up steps
  int batch_size = 64;
  double learning_rate = 0.5;
  // Share of the warm-up set made of response anchors.
  double anchor_fraction = 0.5;
  // Alignment steps after each RL step (0 = warm-up only).
  int interleave_steps = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

// Balanced judge examples from `scoring` plus response anchors in the
// configured proportion.
std::vector<SftExample> build_alignment_set(std::span<const Task> tasks,
                                            const PolicyParams& reference,
                                            const ScoringSet& scoring,
                                            const AlignmentOptions& opts, int max_response_length);

// Minibatch cross-entropy on alignment examples. Returns the trained params
// and the loss of each step.
std::pair<PolicyParams, std::vector<double>> train_grading_alignment(
    const PolicyParams& params, std::span<const SftExample> examples, const AlignmentOptions& opts);

}  // namespace srrl

#endif  // SRRL_TASKGEN_HPP_
