#include "srrl/reward.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "srrl/errors.hpp"
#include "srrl/parallel.hpp"
#include "srrl/rng.hpp"

namespace srrl {

std::string_view to_string(RubricScope scope) {
  switch (scope) {
    case RubricScope::kAll: return "all";
    case RubricScope::kPositive: return "positive";
    case RubricScope::kNegative: return "negative";
  }
  return "unknown";
}

RubricScope rubric_scope_from_string(std::string_view name) {
  for (auto s : {RubricScope::kAll, RubricScope::kPositive, RubricScope::kNegative}) {
    if (to_string(s) == name) return s;
  }
  throw InputError("unknown rubric scope '" + std::string(name) + "'");
}

void GraderSpec::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(flip_prob_fp) || !prob(flip_prob_fn)) {
    throw ConfigError("grader flip probabilities must lie in [0, 1]");
  }
  if (!(grading_temperature >= 0.0)) throw ConfigError("grading temperature must be nonnegative");
}

namespace {

bool in_scope(RubricScope scope, int points) {
  switch (scope) {
    case RubricScope::kAll: return true;
    case RubricScope::kPositive: return points > 0;
    case RubricScope::kNegative: return points < 0;
  }
  return false;
}

void check_alignment(std::span<const Verdict> verdicts, std::span<const Rubric> rubrics) {
  if (verdicts.size() != rubrics.size()) {
    throw InputError("verdict count " + std::to_string(verdicts.size()) +
                     " does not match rubric count " + std::to_string(rubrics.size()));
  }
  for (std::size_t i = 0; i < rubrics.size(); ++i) {
    if (verdicts[i].rubric_id != rubrics[i].id) {
      throw InputError("verdict " + std::to_string(i) + " is for rubric '" + verdicts[i].rubric_id +
                       "' but rubric '" + rubrics[i].id + "' is at that position");
    }
  }
}

Token clamp_to_content(const Vocabulary& vocab, int value) {
  return static_cast<Token>(std::clamp(value, 0, vocab.content_size() - 1));
}

}  // namespace

Verdict grade_oracle(const Rollout& rollout, const Rubric& rubric) {
  return {rubric.id, rubric.criterion.evaluate(rollout.content()), GraderKind::kOracle, 0.0};
}

Verdict grade_noisy(const Rollout& rollout, const Rubric& rubric, const GraderSpec& spec,
                    std::uint64_t seed) {
  Verdict v = grade_oracle(rollout, rubric);
  v.grader_kind = GraderKind::kNoisy;
  // One uniform per call; sharing it between both flip rules couples graders
  // with different probabilities on the same seed.
  const double u = Rng(seed).uniform();
  if (!v.met && in_scope(spec.fp_scope, rubric.points) && u < spec.flip_prob_fp) {
    v.met = true;
  } else if (v.met && in_scope(spec.fn_scope, rubric.points) && u < spec.flip_prob_fn) {
    v.met = false;
  }
  return v;
}

TokenSeq encode_rubric(const Vocabulary& vocab, const Rubric& rubric) {
  const auto& c = rubric.criterion;
  switch (c.kind) {
    case CriterionKind::kContainsToken: return {vocab.kind_contains(), c.value};
    case CriterionKind::kForbidsToken: return {vocab.kind_forbids(), c.value};
    // Length bounds beyond the content range collapse onto its last id.
    case CriterionKind::kMinLength: return {vocab.kind_min_length(), clamp_to_content(vocab, c.value)};
    case CriterionKind::kMaxLength: return {vocab.kind_max_length(), clamp_to_content(vocab, c.value)};
    case CriterionKind::kPrefixIs: {
      TokenSeq out{vocab.kind_prefix()};
      out.insert(out.end(), c.prefix.begin(), c.prefix.end());
      return out;
    }
  }
  return {};
}

JudgeQuery make_judge_query(const Vocabulary& vocab, std::span<const Token> prompt,
                            const Rollout& rollout, const Rubric& rubric) {
  JudgeQuery q;
  const auto content = rollout.content();
  q.context.reserve(prompt.size() + content.size() + 3);
  q.context.push_back(vocab.judge());
  q.context.insert(q.context.end(), prompt.begin(), prompt.end());
  q.context.push_back(vocab.sep());
  q.context.insert(q.context.end(), content.begin(), content.end());
  q.context.push_back(vocab.sep());
  q.rubric_tokens = encode_rubric(vocab, rubric);
  return q;
}

Verdict grade_self(const PolicySnapshot& snapshot, std::span<const Token> prompt,
                   const Rollout& rollout, const Rubric& rubric, double grading_temperature,
                   std::uint64_t seed, GraderKind tag) {
  if (!(grading_temperature >= 0.0)) throw InputError("grading temperature must be nonnegative");
  const auto& params = snapshot.params();
  const auto vocab = params.vocabulary();
  const JudgeQuery q = make_judge_query(vocab, prompt, rollout, rubric);
  const auto logits = next_token_logits(params, q.context, q.rubric_tokens);
  Rng rng(seed);
  const Token verdict = sample_token(logits, grading_temperature, rng);
  return {rubric.id, verdict == vocab.met(), tag, grading_temperature};
}

double judge_logit_margin(const PolicyParams& params, const JudgeQuery& query) {
  auto logits = next_token_logits(params, query.context, query.rubric_tokens);
  std::partial_sort(logits.begin(), logits.begin() + 2, logits.end(), std::greater<>());
  return logits[0] - logits[1];
}

double raw_reward_ratio(std::span<const Verdict> verdicts, std::span<const Rubric> rubrics) {
  check_alignment(verdicts, rubrics);
  long long earned = 0, possible = 0;
  for (std::size_t i = 0; i < rubrics.size(); ++i) {
    if (rubrics[i].points > 0) possible += rubrics[i].points;
    if (verdicts[i].met) earned += rubrics[i].points;
  }
  if (possible <= 0) throw ConfigError("rubric set has no positive points");
  return static_cast<double>(earned) / static_cast<double>(possible);
}

double reward_score(std::span<const Verdict> verdicts, std::span<const Rubric> rubrics) {
  return std::clamp(raw_reward_ratio(verdicts, rubrics), 0.0, 1.0);
}

Verdict grade_one(const Grader& grader, const GradeRequest& request) {
  const auto& spec = grader.spec;
  switch (spec.kind) {
    case GraderKind::kOracle:
      return grade_oracle(*request.rollout, *request.rubric);
    case GraderKind::kNoisy:
      return grade_noisy(*request.rollout, *request.rubric, spec, request.seed);
    case GraderKind::kSelf:
    case GraderKind::kSnapshotSelf:
      if (!grader.snapshot) throw ConfigError("self grading requires a policy snapshot");
      return grade_self(*grader.snapshot, request.prompt, *request.rollout, *request.rubric,
                        spec.grading_temperature, request.seed, spec.kind);
  }
  throw ConfigError("unknown grader kind");
}

BatchGradeResult grade_batch(std::span<const GradeRequest> requests, const Grader& grader,
                             const GradingOptions& options) {
  using Clock = std::chrono::steady_clock;
  grader.spec.validate();
  if (!(options.injected_latency >= 0.0)) throw ConfigError("injected latency must be nonnegative");
  const bool remote = options.backend == GradingBackend::kSimulatedRemote;
  const auto latency = std::chrono::duration<double>(remote ? options.injected_latency : 0.0);

  BatchGradeResult out;
  out.verdicts.resize(requests.size());
  out.elapsed.resize(requests.size());
  parallel_for(requests.size(), options.workers, [&](std::size_t i) {
    const auto start = Clock::now();
    if (latency.count() > 0.0) std::this_thread::sleep_for(latency);
    out.verdicts[i] = grade_one(grader, requests[i]);
    out.elapsed[i] = std::chrono::duration<double>(Clock::now() - start).count();
  });
  out.injected_latency_total = static_cast<double>(requests.size()) * latency.count();
  return out;
}

}  // namespace srrl
