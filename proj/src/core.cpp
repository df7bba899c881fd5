#include "srrl/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "srrl/errors.hpp"

namespace srrl {

Vocabulary::Vocabulary(int size) : size_(size) {
  if (size < kMinSize) {
    throw ConfigError("vocabulary size " + std::to_string(size) + " is below the minimum of " +
                      std::to_string(kMinSize));
  }
}

std::string_view to_string(CriterionKind kind) {
  switch (kind) {
    case CriterionKind::kContainsToken: return "contains-token";
    case CriterionKind::kMinLength: return "min-length";
    case CriterionKind::kMaxLength: return "max-length";
    case CriterionKind::kForbidsToken: return "forbids-token";
    case CriterionKind::kPrefixIs: return "prefix-is";
  }
  return "unknown";
}

CriterionKind criterion_kind_from_string(std::string_view name) {
  for (auto kind : {CriterionKind::kContainsToken, CriterionKind::kMinLength,
                    CriterionKind::kMaxLength, CriterionKind::kForbidsToken,
                    CriterionKind::kPrefixIs}) {
    if (to_string(kind) == name) return kind;
  }
  throw InputError("unknown criterion kind '" + std::string(name) + "'");
}

std::string_view to_string(GraderKind kind) {
  switch (kind) {
    case GraderKind::kOracle: return "oracle";
    case GraderKind::kNoisy: return "noisy";
    case GraderKind::kSelf: return "self";
    case GraderKind::kSnapshotSelf: return "snapshot-self";
  }
  return "unknown";
}

GraderKind grader_kind_from_string(std::string_view name) {
  for (auto kind : {GraderKind::kOracle, GraderKind::kNoisy, GraderKind::kSelf,
                    GraderKind::kSnapshotSelf}) {
    if (to_string(kind) == name) return kind;
  }
  throw InputError("unknown grader kind '" + std::string(name) + "'");
}

bool Criterion::evaluate(std::span<const Token> content) const {
  const auto n = static_cast<int>(content.size());
  switch (kind) {
    case CriterionKind::kContainsToken:
      return std::find(content.begin(), content.end(), value) != content.end();
    case CriterionKind::kMinLength:
      return n >= value;
    case CriterionKind::kMaxLength:
      return n <= value;
    case CriterionKind::kForbidsToken:
      return std::find(content.begin(), content.end(), value) == content.end();
    case CriterionKind::kPrefixIs:
      return prefix.size() <= content.size() &&
             std::equal(prefix.begin(), prefix.end(), content.begin());
  }
  return false;
}

int Task::positive_points() const {
  int total = 0;
  for (const auto& r : rubrics) {
    if (r.points > 0) total += r.points;
  }
  return total;
}

void TrainerConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (group_size < 2) fail("group_size must be at least 2");
  if (batch_size < 1) fail("batch_size must be positive");
  if (epochs < 0 || steps_per_epoch < 0) fail("epochs and steps_per_epoch must be nonnegative");
  if (inner_iterations < 1) fail("inner_iterations must be positive");
  // clip_low >= 1 (or infinity) leaves the ratio unbounded below.
  if (!(clip_low > 0.0)) fail("clip_low must be positive");
  if (!(clip_high > 0.0)) fail("clip_high must be positive");
  if (!(rollout_temperature >= 0.0) || !(grading_temperature >= 0.0)) {
    fail("temperatures must be nonnegative");
  }
  if (max_prompt_length < 1 || max_response_length < 1) fail("length limits must be positive");
  if (!std::isfinite(learning_rate) || learning_rate < 0.0) fail("learning_rate must be finite and >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must lie in [0, 1)");
  if (dynamic_sampling_rounds < 0) fail("dynamic_sampling_rounds must be nonnegative");
}

std::vector<std::string> validate_task(const Task& task, const TaskLimits& limits) {
  std::vector<std::string> issues;
  auto in_vocab = [&](Token t) { return t >= 0 && t < limits.vocab_size; };

  if (task.id.empty()) issues.emplace_back("empty task id");
  if (task.rubrics.empty()) issues.emplace_back("empty rubric set");
  if (task.positive_points() <= 0) issues.emplace_back("no positive points");
  if (static_cast<int>(task.prompt.size()) > limits.max_prompt_length) {
    issues.emplace_back("prompt too long");
  }
  if (!std::all_of(task.prompt.begin(), task.prompt.end(), in_vocab)) {
    issues.emplace_back("prompt token out of vocabulary");
  }

  std::set<std::string> seen;
  for (const auto& r : task.rubrics) {
    if (r.points == 0) issues.push_back("rubric " + r.id + " has zero points");
    if (!seen.insert(r.id).second) issues.push_back("duplicate rubric id " + r.id);
    const auto& c = r.criterion;
    switch (c.kind) {
      case CriterionKind::kContainsToken:
      case CriterionKind::kForbidsToken:
        if (!in_vocab(c.value)) issues.push_back("rubric " + r.id + " token out of vocabulary");
        break;
      case CriterionKind::kMinLength:
      case CriterionKind::kMaxLength:
        if (c.value < 0) issues.push_back("rubric " + r.id + " has a negative length bound");
        break;
      case CriterionKind::kPrefixIs:
        if (!std::all_of(c.prefix.begin(), c.prefix.end(), in_vocab)) {
          issues.push_back("rubric " + r.id + " prefix token out of vocabulary");
        }
        break;
    }
  }

  if (task.ideal_completion) {
    const auto& ideal = *task.ideal_completion;
    if (static_cast<int>(ideal.size()) > limits.max_response_length) {
      issues.emplace_back("ideal completion too long");
    }
    if (!std::all_of(ideal.begin(), ideal.end(), in_vocab)) {
      issues.emplace_back("ideal completion token out of vocabulary");
    }
  }
  return issues;
}

}  // namespace srrl
