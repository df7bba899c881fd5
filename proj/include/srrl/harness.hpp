#ifndef SRRL_HARNESS_HPP_
#define SRRL_HARNESS_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "srrl/core.hpp"
#include "srrl/grpo.hpp"
#include "srrl/io.hpp"
#include "srrl/metaeval.hpp"
#include "srrl/policy.hpp"
#include "srrl/reward.hpp"
#include "srrl/taskgen.hpp"

namespace srrl {

// Default parent directory for run outputs when --out is not given.
inline constexpr const char* kOutputDirEnv = "SRRL_OUTPUT_DIR";

std::string version_string();

struct DatasetConfig {
  std::string tasks_path;  // empty: generate with `generate`
  TaskGenOptions generate = [] {
    TaskGenOptions g;
    g.count = 32;  // one full batch
    return g;
  }();
};

struct PolicyConfig {
  PolicyDims dims;
  double init_scale = 0.1;
  std::string init_checkpoint;  // empty: random init from the trainer seed
};

struct SftConfig {
  int steps = 200;
  int batch_size = 32;
  double learning_rate = 1.0;
};

struct HarnessConfig {
  int workers = 1;
  int checkpoint_every = 0;
  // Meta-evaluate the live judge every this many steps (0: off) on a held-out
  // scoring set of `metaeval_set_size` pairs.
  int metaeval_every = 0;
  int metaeval_set_size = 1000;
  GradingBackend grading_backend = GradingBackend::kColocated;
  double injected_latency = 0.0;  // seconds per grading call, remote backend only
  bool log_verdicts = true;
};

// The whole run, as read from the config file. Sections: trainer, grader,
// dataset, policy, alignment, sft, harness.
struct RunConfig {
  TrainerConfig trainer;
  GraderSpec grader;
  DatasetConfig dataset;
  PolicyConfig policy;
  AlignmentOptions alignment;  // used by self graders; steps = 0 skips the warm-up
  SftConfig sft;
  HarnessConfig harness;

  void validate() const;
};

json to_json(const RunConfig& c);
// Missing keys keep their defaults; unknown keys are a ConfigError.
RunConfig run_config_from_json(const json& j);
RunConfig load_run_config(const std::string& path);

// "section.key" -> the dotted names accepted by apply_override, in config
// order. Each one backs a CLI flag of the same name.
std::vector<std::string> override_keys();

// Sets one config entry. `value` is parsed as JSON when it parses, otherwise
// taken as a string, so `--trainer.epochs 3` and `--grader.kind self` both work.
void apply_override(RunConfig& c, std::string_view key, std::string_view value);

// $SRRL_OUTPUT_DIR/<name>, or runs/<name> when the variable is unset.
std::string default_output_dir(std::string_view name);

TaskSet load_or_generate_tasks(const DatasetConfig& dataset);
PolicyParams initial_policy(const RunConfig& c);

// Run directory layout:
//   manifest.jsonl      config, seed, version, command
//   tasks.jsonl         the task set trained on
//   reports.jsonl       one StepReport per step
//   verdicts.jsonl      every verdict (when harness.log_verdicts)
//   scoring_set.jsonl   grading-alignment pairs (self graders with warm-up)
//   alignment.jsonl     warm-up loss per step
//   meta_eval.jsonl     {step, ...MetaEvalResult} when harness.metaeval_every > 0
//   checkpoints/step-NNNNNN.bin, final.bin
struct TrainArtifacts {
  std::string out_dir;
  TrainResult result;
  std::vector<std::pair<std::int64_t, MetaEvalResult>> meta_eval;
};

void write_manifest(const std::string& out_dir, std::string_view command, const RunConfig& c);
RunConfig read_manifest_config(const std::string& path);

TrainArtifacts run_train(const RunConfig& c, const std::string& out_dir);

struct SftArtifacts {
  std::string out_dir;
  PolicyParams params;
  std::vector<double> losses;
};

// Cross-entropy on the tasks' ideal completions; writes sft.jsonl with
// {step, loss} records and checkpoints.
SftArtifacts run_sft(const RunConfig& c, const std::string& out_dir);

struct EvalResult {
  double mean_score = 0.0;
  std::vector<double> task_scores;  // task order
  int samples_per_task = 0;
};

// Oracle-scored mean reward of `params` over `tasks`, `samples` rollouts each.
EvalResult evaluate_policy(const PolicyParams& params, std::span<const Task> tasks, int samples,
                           std::uint64_t seed, double temperature, int max_response_length,
                           int workers = 1);

// Curves from a run directory: curve_reward.jsonl, curve_oracle_reward.jsonl,
// curve_response_length.jsonl, curve_clip_fraction.jsonl and, when meta-eval
// ran, curve_mf1.jsonl. Each holds {step, value}. Returns the files written.
std::vector<std::string> write_report_curves(const std::string& run_dir);

// One train_step per backend from identical state and seeds; the grading
// work is the same, only the backend and its latency differ.
struct BackendComparison {
  StepReport colocated;
  StepReport remote;
  std::size_t grading_calls = 0;
};
BackendComparison compare_grading_backends(const PolicyParams& params, std::span<const Task> batch,
                                           const TrainerConfig& config, const GraderSpec& grader,
                                           double injected_latency, int workers);

}  // namespace srrl

#endif  // SRRL_HARNESS_HPP_
