#ifndef SRRL_CORE_HPP_
#define SRRL_CORE_HPP_

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace srrl {

using Token = std::int32_t;
using TokenSeq = std::vector<Token>;

// Token layout for a vocabulary of `size` ids. Content tokens occupy the low
// ids [0, content_size()); the ten control tokens sit at the top of the range.
class Vocabulary {
 public:
  static constexpr int kReservedCount = 10;
  static constexpr int kMinSize = 16;

  explicit Vocabulary(int size = 32);

  int size() const { return size_; }
  int content_size() const { return size_ - kReservedCount; }
  bool contains(Token t) const { return t >= 0 && t < size_; }
  bool is_content(Token t) const { return t >= 0 && t < content_size(); }

  Token end() const { return size_ - 1; }
  Token judge() const { return size_ - 2; }
  Token sep() const { return size_ - 3; }
  Token met() const { return size_ - 4; }
  Token unmet() const { return size_ - 5; }
  Token kind_contains() const { return size_ - 6; }
  Token kind_min_length() const { return size_ - 7; }
  Token kind_max_length() const { return size_ - 8; }
  Token kind_forbids() const { return size_ - 9; }
  Token kind_prefix() const { return size_ - 10; }

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;

 private:
  int size_;
};

enum class CriterionKind {
  kContainsToken,
  kMinLength,
  kMaxLength,
  kForbidsToken,
  kPrefixIs,
};

std::string_view to_string(CriterionKind kind);
CriterionKind criterion_kind_from_string(std::string_view name);

// Machine-checkable predicate over a response's content tokens.
struct Criterion {
  CriterionKind kind = CriterionKind::kContainsToken;
  int value = 0;     // token id or length bound; unused for kPrefixIs
  TokenSeq prefix;   // only for kPrefixIs

  static Criterion contains_token(Token t) { return {CriterionKind::kContainsToken, t, {}}; }
  static Criterion min_length(int n) { return {CriterionKind::kMinLength, n, {}}; }
  static Criterion max_length(int n) { return {CriterionKind::kMaxLength, n, {}}; }
  static Criterion forbids_token(Token t) { return {CriterionKind::kForbidsToken, t, {}}; }
  static Criterion prefix_is(TokenSeq seq) { return {CriterionKind::kPrefixIs, 0, std::move(seq)}; }

  bool evaluate(std::span<const Token> content) const;

  friend bool operator==(const Criterion&, const Criterion&) = default;
};

struct Rubric {
  std::string id;
  int points = 0;
  Criterion criterion;
  std::string axis = "other";

  friend bool operator==(const Rubric&, const Rubric&) = default;
};

struct Task {
  std::string id;
  TokenSeq prompt;
  std::vector<Rubric> rubrics;
  std::optional<TokenSeq> ideal_completion;
  // False only for generated tasks known to have no response scoring 1.
  bool solvable = true;

  int positive_points() const;

  friend bool operator==(const Task&, const Task&) = default;
};

using TaskSet = std::vector<Task>;

struct Rollout {
  std::string task_id;
  TokenSeq tokens;
  std::vector<double> old_logprobs;
  int group_index = 0;
  // True when the last token is the end-of-response control token.
  bool ended = false;

  // Tokens the rubrics are judged on: everything but a trailing end token.
  std::span<const Token> content() const {
    return std::span<const Token>(tokens).first(tokens.size() - (ended ? 1 : 0));
  }

  friend bool operator==(const Rollout&, const Rollout&) = default;
};

enum class GraderKind { kOracle, kNoisy, kSelf, kSnapshotSelf };

std::string_view to_string(GraderKind kind);
GraderKind grader_kind_from_string(std::string_view name);

struct Verdict {
  std::string rubric_id;
  bool met = false;
  GraderKind grader_kind = GraderKind::kOracle;
  double grading_temperature = 0.0;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

// A (response, rubric) pair with its ground-truth verdict: the unit of
// grading-alignment data and of grader meta-evaluation.
struct ScoringExample {
  std::string task_id;
  TokenSeq prompt;
  Rollout rollout;
  Rubric rubric;
  bool oracle_label = false;

  friend bool operator==(const ScoringExample&, const ScoringExample&) = default;
};

struct GroupScores {
  std::vector<double> scores;
  std::vector<double> advantages;
  bool degenerate = false;
};

struct TrainerConfig {
  int group_size = 4;
  int batch_size = 32;
  int epochs = 1;
  int steps_per_epoch = 1;
  int inner_iterations = 1;
  double clip_low = 0.2;
  double clip_high = 0.28;
  double rollout_temperature = 1.0;
  double grading_temperature = 1.0;
  int max_prompt_length = 16;
  int max_response_length = 8;
  double learning_rate = 10.0;
  double momentum = 0.0;           // 0 disables the momentum buffer
  bool dynamic_sampling = false;   // resample tasks whose groups are degenerate
  int dynamic_sampling_rounds = 3;
  std::uint64_t seed = 0;

  // Throws ConfigError on the first violated invariant.
  void validate() const;
};

struct TaskLimits {
  int vocab_size = 32;
  int max_prompt_length = 16;
  int max_response_length = 8;
};

// Returns one message per violated invariant; empty means valid.
std::vector<std::string> validate_task(const Task& task, const TaskLimits& limits = {});

}  // namespace srrl

#endif  // SRRL_CORE_HPP_
