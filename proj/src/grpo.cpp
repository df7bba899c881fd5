#include "srrl/grpo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "srrl/errors.hpp"
#include "srrl/parallel.hpp"
#include "srrl/rng.hpp"

namespace srrl {

GroupScores group_advantages(std::span<const double> scores) {
  if (scores.size() < 2) throw InputError("a group needs at least two scores");
  const auto n = static_cast<double>(scores.size());
  const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  const double std_dev = std::sqrt(var / n);

  GroupScores out;
  out.scores.assign(scores.begin(), scores.end());
  out.advantages.assign(scores.size(), 0.0);
  if (!(std_dev >= kDegenerateStd)) {
    out.degenerate = true;
    return out;
  }
  for (std::size_t i = 0; i < scores.size(); ++i) out.advantages[i] = (scores[i] - mean) / std_dev;
  return out;
}

ObjectiveResult grpo_objective(const PolicyParams& live, std::span<const SurrogateSample> samples,
                               ClipRange clip) {
  ObjectiveResult out{0.0, PolicyGradient(live.dims()), {}, 0, 0.0};
  for (const auto& s : samples) out.token_count += s.rollout.tokens.size();
  if (out.token_count == 0) return out;
  const double inv_tokens = 1.0 / static_cast<double>(out.token_count);
  const double lo = 1.0 - clip.low;
  const double hi = 1.0 + clip.high;
  out.tokens.reserve(out.token_count);

  std::size_t clipped = 0;
  std::vector<double> weights;
  for (const auto& s : samples) {
    const auto& r = s.rollout;
    if (r.old_logprobs.size() != r.tokens.size()) {
      throw InputError("rollout " + r.task_id + "/" + std::to_string(r.group_index) +
                       " has mismatched old log-probabilities");
    }
    const auto live_lp = logprob(live, s.prompt, r.tokens);
    const double a = s.advantage;
    weights.assign(r.tokens.size(), 0.0);
    for (std::size_t t = 0; t < r.tokens.size(); ++t) {
      const double w = std::exp(live_lp[t] - r.old_logprobs[t]);
      if (!std::isfinite(w) || !(w > 0.0)) {
        throw NumericError("non-finite importance ratio in rollout " + r.task_id + "/" +
                           std::to_string(r.group_index) + " at token " + std::to_string(t));
      }
      const double unclipped = w * a;
      const double bounded = std::clamp(w, lo, hi) * a;
      TokenStats ts{w, a, false};
      if (unclipped <= bounded) {
        out.value += unclipped;
        // d(w A)/d theta = A w grad log pi
        weights[t] = a * w * inv_tokens;
      } else {
        out.value += bounded;
        ts.clipped = true;
        ++clipped;
      }
      out.tokens.push_back(ts);
    }
    if (std::any_of(weights.begin(), weights.end(), [](double w) { return w != 0.0; })) {
      accumulate_logprob_grad(live, s.prompt, r.tokens, weights, out.gradient);
    }
  }
  out.value *= inv_tokens;
  out.clip_fraction = static_cast<double>(clipped) * inv_tokens;
  return out;
}

bool StepReport::same_outcome(const StepReport& o) const {
  return step == o.step && mean_reward == o.mean_reward &&
         oracle_mean_reward == o.oracle_mean_reward &&
         mean_response_length == o.mean_response_length && objective == o.objective &&
         clip_fraction == o.clip_fraction && degenerate_groups == o.degenerate_groups &&
         resampled_groups == o.resampled_groups && injected_latency == o.injected_latency &&
         alignment_loss == o.alignment_loss;
}

std::uint64_t rollout_seed(std::uint64_t run_seed, std::int64_t step, std::size_t slot,
                           const std::string& task_id, int group_index) {
  return derive_seed({run_seed, hash_id("rollout"), static_cast<std::uint64_t>(step), slot,
                      hash_id(task_id), static_cast<std::uint64_t>(group_index)});
}

std::uint64_t grading_seed(std::uint64_t run_seed, std::int64_t step, const std::string& task_id,
                           int group_index, const std::string& rubric_id) {
  return derive_seed({run_seed, hash_id("grade"), static_cast<std::uint64_t>(step),
                      hash_id(task_id), static_cast<std::uint64_t>(group_index),
                      hash_id(rubric_id)});
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Group {
  const Task* task = nullptr;
  std::size_t slot = 0;
  std::vector<GradedRollout> members;
  bool degenerate = false;
};

// Samples, grades and standardizes one group per entry of `groups`.
// Returns the seconds spent grading and scoring, plus injected latency.
std::pair<double, double> fill_groups(std::vector<Group>& groups, const PolicySnapshot& snapshot,
                                      const TrainerConfig& config, const Grader& grader,
                                      const GradingOptions& grading, std::int64_t step,
                                      std::uint64_t seed_salt) {
  const int g_size = config.group_size;
  const std::size_t total = groups.size() * static_cast<std::size_t>(g_size);
  for (auto& grp : groups) grp.members.assign(g_size, GradedRollout{});

  parallel_for(total, grading.workers, [&](std::size_t k) {
    auto& grp = groups[k / g_size];
    const int gi = static_cast<int>(k % g_size);
    auto& m = grp.members[gi];
    m.task_index = grp.slot;
    m.rollout = sample(snapshot.params(), grp.task->prompt, config.rollout_temperature,
                       config.max_response_length,
                       derive_seed({rollout_seed(config.seed, step, grp.slot, grp.task->id, gi),
                                    seed_salt}));
    m.rollout.task_id = grp.task->id;
    m.rollout.group_index = gi;
  });

  const auto reward_start = Clock::now();
  std::vector<GradeRequest> requests;
  for (auto& grp : groups) {
    for (auto& m : grp.members) {
      for (const auto& rubric : grp.task->rubrics) {
        const auto seed = derive_seed(
            {grading_seed(config.seed, step, grp.task->id, m.rollout.group_index, rubric.id),
             seed_salt});
        m.grade_seeds.push_back(seed);
        requests.push_back({grp.task->prompt, &m.rollout, &rubric, seed});
      }
    }
  }
  const auto graded = grade_batch(requests, grader, grading);
  std::size_t k = 0;
  std::vector<double> scores;
  for (auto& grp : groups) {
    scores.clear();
    for (auto& m : grp.members) {
      const auto n = grp.task->rubrics.size();
      m.verdicts.assign(graded.verdicts.begin() + k, graded.verdicts.begin() + k + n);
      m.grade_elapsed.assign(graded.elapsed.begin() + k, graded.elapsed.begin() + k + n);
      k += n;
      m.score = reward_score(m.verdicts, grp.task->rubrics);
      scores.push_back(m.score);
    }
    const auto adv = group_advantages(scores);
    grp.degenerate = adv.degenerate;
    for (std::size_t i = 0; i < grp.members.size(); ++i) grp.members[i].advantage = adv.advantages[i];
  }
  return {seconds_since(reward_start), graded.injected_latency_total};
}

}  // namespace

StepReport train_step(TrainerState& state, std::span<const Task> batch, const TrainerConfig& config,
                      const GraderSpec& grader_spec, const StepOptions& options) {
  config.validate();
  grader_spec.validate();
  if (batch.empty()) throw InputError("training batch is empty");
  const auto step_start = Clock::now();
  StepReport report;
  report.step = state.step;

  // The snapshot both generates and (for self graders) judges this step.
  const PolicySnapshot snapshot(state.live, state.step);
  Grader grader{grader_spec, std::nullopt};
  if (grader_spec.kind == GraderKind::kSelf || grader_spec.kind == GraderKind::kSnapshotSelf) {
    grader.snapshot = snapshot;
    grader.spec.grading_temperature = config.grading_temperature;
  }

  std::vector<Group> groups(batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j) groups[j] = Group{&batch[j], j, {}, false};
  auto [reward_time, injected] =
      fill_groups(groups, snapshot, config, grader, options.grading, state.step, 0);

  if (config.dynamic_sampling && !options.resample_pool.empty()) {
    Rng pick(derive_seed({config.seed, hash_id("resample"), static_cast<std::uint64_t>(state.step)}));
    for (int round = 1; round <= config.dynamic_sampling_rounds; ++round) {
      std::vector<std::size_t> stale;
      for (std::size_t j = 0; j < groups.size(); ++j) {
        if (groups[j].degenerate) stale.push_back(j);
      }
      if (stale.empty()) break;
      std::vector<Group> fresh(stale.size());
      for (std::size_t i = 0; i < stale.size(); ++i) {
        const auto& task = options.resample_pool[pick.below(options.resample_pool.size())];
        fresh[i] = Group{&task, stale[i], {}, false};
      }
      auto [rt, inj] = fill_groups(fresh, snapshot, config, grader, options.grading, state.step,
                                   static_cast<std::uint64_t>(round));
      reward_time += rt;
      injected += inj;
      for (std::size_t i = 0; i < stale.size(); ++i) {
        if (!fresh[i].degenerate) {
          groups[stale[i]] = std::move(fresh[i]);
          ++report.resampled_groups;
        }
      }
    }
  }

  std::vector<SurrogateSample> samples;
  double reward_sum = 0.0, length_sum = 0.0;
  for (const auto& grp : groups) {
    if (grp.degenerate) ++report.degenerate_groups;
    for (const auto& m : grp.members) {
      samples.push_back({grp.task->prompt, m.rollout, m.advantage});
      reward_sum += m.score;
      length_sum += static_cast<double>(m.rollout.tokens.size());
    }
  }
  const auto n_rollouts = static_cast<double>(samples.size());
  report.mean_reward = reward_sum / n_rollouts;
  report.mean_response_length = length_sum / n_rollouts;

  const ClipRange clip{config.clip_low, config.clip_high};
  double clip_sum = 0.0;
  for (int it = 0; it < config.inner_iterations; ++it) {
    auto obj = grpo_objective(state.live, samples, clip);
    if (it == 0) report.objective = obj.value;
    clip_sum += obj.clip_fraction;
    if (config.momentum > 0.0) {
      state.velocity *= config.momentum;
      state.velocity += obj.gradient;
      state.live = apply_update(state.live, state.velocity, config.learning_rate);
    } else {
      state.live = apply_update(state.live, obj.gradient, config.learning_rate);
    }
  }
  report.clip_fraction = clip_sum / config.inner_iterations;
  if (!state.live.all_finite()) {
    throw NumericError("parameters became non-finite at step " + std::to_string(state.step));
  }
  report.step_time = seconds_since(step_start);
  report.reward_time = reward_time;
  report.injected_latency = injected;

  // Measurement only; kept out of the timed region.
  double oracle_sum = 0.0;
  for (const auto& grp : groups) {
    for (const auto& m : grp.members) {
      std::vector<Verdict> vs;
      vs.reserve(grp.task->rubrics.size());
      for (const auto& rubric : grp.task->rubrics) vs.push_back(grade_oracle(m.rollout, rubric));
      oracle_sum += reward_score(vs, grp.task->rubrics);
    }
  }
  report.oracle_mean_reward = oracle_sum / n_rollouts;

  if (options.trace) {
    auto& tr = *options.trace;
    tr.snapshot = snapshot;
    tr.tasks.clear();
    tr.rollouts.clear();
    for (std::size_t j = 0; j < groups.size(); ++j) {
      tr.tasks.push_back(*groups[j].task);
      for (auto m : groups[j].members) {
        m.task_index = j;
        tr.rollouts.push_back(std::move(m));
      }
    }
  }
  ++state.step;
  return report;
}

namespace {

double interleave_alignment(TrainerState& state, const AlignmentMix& mix, std::uint64_t seed) {
  if (mix.steps_per_rl_step <= 0 || mix.examples.empty()) return 0.0;
  Rng rng(derive_seed({seed, hash_id("alignment-mix"), static_cast<std::uint64_t>(state.step)}));
  std::vector<SftExample> batch;
  double loss = 0.0;
  for (int k = 0; k < mix.steps_per_rl_step; ++k) {
    batch.clear();
    for (int i = 0; i < std::max(1, mix.batch_size); ++i) {
      batch.push_back(mix.examples[rng.below(mix.examples.size())]);
    }
    auto res = sft_step(state.live, batch, mix.learning_rate);
    state.live = std::move(res.params);
    loss += res.loss;
  }
  return loss / mix.steps_per_rl_step;
}

}  // namespace

TrainResult train(const PolicyParams& init, std::span<const Task> tasks,
                  const TrainerConfig& config, const GraderSpec& grader,
                  const TrainOptions& options) {
  config.validate();
  TrainerState state(init);
  TrainResult result{init, {}};
  if (options.on_checkpoint) options.on_checkpoint(0, state.live);
  const std::size_t n = tasks.size();
  const std::size_t b = static_cast<std::size_t>(config.batch_size);
  if (n == 0 && config.epochs > 0 && config.steps_per_epoch > 0) {
    throw InputError("cannot train on an empty task set");
  }

  StepTrace trace;
  StepOptions step_opts;
  step_opts.grading = options.grading;
  step_opts.resample_pool = tasks;
  if (options.on_trace) step_opts.trace = &trace;

  std::vector<std::size_t> order(n);
  std::vector<Task> batch;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed({config.seed, hash_id("epoch-shuffle"), static_cast<std::uint64_t>(epoch)}));
    shuffle(order.begin(), order.end(), rng);
    for (int m = 0; m < config.steps_per_epoch; ++m) {
      batch.clear();
      for (std::size_t i = 0; i < b; ++i) batch.push_back(tasks[order[(m * b + i) % n]]);
      auto report = train_step(state, batch, config, grader, step_opts);
      report.alignment_loss = interleave_alignment(state, options.alignment, config.seed);
      if (options.on_trace) options.on_trace(report.step, trace);
      if (options.on_step) options.on_step(report);
      if (options.after_step) options.after_step(state.step, state.live);
      result.reports.push_back(report);
      if (options.on_checkpoint && options.checkpoint_every > 0 &&
          state.step % options.checkpoint_every == 0) {
        options.on_checkpoint(state.step, state.live);
      }
    }
  }
  result.params = state.live;
  return result;
}

double sft_loss(const PolicyParams& params, std::span<const SftExample> batch,
                PolicyGradient* gradient) {
  std::size_t scored = 0;
  for (const auto& ex : batch) {
    if (ex.completion.empty()) throw InputError("SFT example has an empty completion");
    if (ex.scored_from >= ex.completion.size()) throw InputError("SFT example scores no tokens");
    scored += ex.completion.size() - ex.scored_from;
  }
  if (scored == 0) throw InputError("SFT batch is empty");
  const double inv = 1.0 / static_cast<double>(scored);
  double nll = 0.0;
  std::vector<double> weights;
  for (const auto& ex : batch) {
    weights.assign(ex.completion.size(), 0.0);
    // Descent direction: gradient of -log-likelihood.
    std::fill(weights.begin() + static_cast<std::ptrdiff_t>(ex.scored_from), weights.end(), -inv);
    const auto lp = gradient ? accumulate_logprob_grad(params, ex.prompt, ex.completion, weights, *gradient)
                             : logprob(params, ex.prompt, ex.completion);
    for (std::size_t t = ex.scored_from; t < lp.size(); ++t) nll -= lp[t];
  }
  return nll * inv;
}

SftResult sft_step(const PolicyParams& live, std::span<const SftExample> batch,
                   double learning_rate) {
  PolicyGradient grad(live.dims());
  const double loss = sft_loss(live, batch, &grad);
  // grad holds d(loss)/d(theta); step against it.
  return {apply_update(live, grad, -learning_rate), loss};
}

std::vector<SftExample> sft_examples(std::span<const Task> tasks, const Vocabulary& vocab,
                                     int max_response_length) {
  std::vector<SftExample> out;
  for (const auto& task : tasks) {
    if (!task.ideal_completion) {
      throw InputError("task " + task.id + " has no ideal completion");
    }
    SftExample ex{task.prompt, *task.ideal_completion, 0};
    if (static_cast<int>(ex.completion.size()) < max_response_length) {
      ex.completion.push_back(vocab.end());
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace srrl
