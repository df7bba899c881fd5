#include "srrl/taskgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <numeric>
#include <set>

#include "srrl/errors.hpp"
#include "srrl/reward.hpp"
#include "srrl/rng.hpp"

namespace srrl {

std::string_view to_string(TaskFamily family) {
  switch (family) {
    case TaskFamily::kContains: return "contains";
    case TaskFamily::kLength: return "length";
    case TaskFamily::kMixed: return "mixed";
    case TaskFamily::kAdversarial: return "adversarial";
  }
  return "unknown";
}

TaskFamily task_family_from_string(std::string_view name) {
  for (auto f : {TaskFamily::kContains, TaskFamily::kLength, TaskFamily::kMixed,
                 TaskFamily::kAdversarial}) {
    if (to_string(f) == name) return f;
  }
  throw InputError("unknown task family '" + std::string(name) + "'");
}

namespace {

constexpr int kMaxSearchTokens = 16;
constexpr int kMaxAttempts = 500;

bool scores_one(const Task& task, std::span<const Token> content) {
  long long earned = 0;
  for (const auto& r : task.rubrics) {
    if (r.criterion.evaluate(content)) earned += r.points;
  }
  return earned >= task.positive_points();
}

class TaskBuilder {
 public:
  TaskBuilder(Rng& rng, const Vocabulary& vocab) : rng_(rng), vocab_(vocab) {}

  Token any_token() { return static_cast<Token>(rng_.below(vocab_.content_size())); }

  Token token_not_in(const std::set<Token>& used) {
    if (static_cast<int>(used.size()) >= vocab_.content_size()) return any_token();
    for (;;) {
      const Token t = any_token();
      if (!used.count(t)) return t;
    }
  }

  void add(int points, Criterion c, const char* axis) {
    task_.rubrics.push_back({"r" + std::to_string(task_.rubrics.size()), points, std::move(c), axis});
  }

  int positive(int lo, int hi) { return rng_.between(lo, hi); }
  int negative(int lo, int hi) { return -rng_.between(lo, hi); }

  // Swaps the rubric at `index` for an arbitrary contains-token one.
  void degrade(std::size_t index) {
    int points = rng_.between(1, 8) * (rng_.bernoulli(0.5) ? 1 : -1);
    auto& r = task_.rubrics[index];
    r.points = points;
    r.criterion = Criterion::contains_token(any_token());
    r.axis = "other";
  }

  Task& task() { return task_; }
  Rng& rng() { return rng_; }

 private:
  Rng& rng_;
  const Vocabulary& vocab_;
  Task task_;
};

int pick_count(Rng& rng, int lo, int hi) { return rng.between(lo, hi); }

void build_contains(TaskBuilder& b, int n_rubrics, int max_prompt) {
  auto& rng = b.rng();
  auto& task = b.task();
  const int len = std::min(max_prompt, rng.between(4, 6));
  const Token target = b.any_token();
  const int reps = (len + 1) / 2;
  std::set<Token> used{target};
  task.prompt.assign(reps, target);
  std::vector<Token> distractors;
  while (static_cast<int>(task.prompt.size()) < len) {
    const Token d = b.token_not_in(used);
    used.insert(d);
    distractors.push_back(d);
    task.prompt.push_back(d);
  }
  shuffle(task.prompt.begin(), task.prompt.end(), rng);

  b.add(b.positive(5, 10), Criterion::contains_token(target), "accuracy");
  for (int i = 1; i < n_rubrics; ++i) {
    Token u;
    if (!distractors.empty()) {
      u = distractors.back();
      distractors.pop_back();
    } else {
      u = b.token_not_in(used);
      used.insert(u);
    }
    b.add(b.negative(2, 8), Criterion::contains_token(u),
          i % 2 ? "accuracy" : "communication-quality");
  }
}

void build_length(TaskBuilder& b, int n_rubrics, int max_prompt, int max_response) {
  auto& rng = b.rng();
  auto& task = b.task();
  const int len = std::min(max_prompt, rng.between(3, 6));
  for (int i = 0; i < len; ++i) task.prompt.push_back(b.any_token());
  const int lo = rng.between(1, std::max(1, max_response / 2));
  const int hi = rng.between(lo, max_response);
  b.add(b.positive(3, 8), Criterion::min_length(lo), "completeness");
  b.add(b.positive(3, 8), Criterion::max_length(hi), "communication-quality");
  std::set<Token> used(task.prompt.begin(), task.prompt.end());
  bool has_prefix = false;
  while (static_cast<int>(task.rubrics.size()) < n_rubrics) {
    switch (rng.below(3)) {
      case 0: {
        const Token u = b.token_not_in(used);
        used.insert(u);
        b.add(b.negative(2, 6), Criterion::contains_token(u), "accuracy");
        break;
      }
      case 1:
        if (!has_prefix) {
          has_prefix = true;
          b.add(b.positive(2, 5), Criterion::prefix_is({task.prompt.front()}), "context-awareness");
          break;
        }
        [[fallthrough]];
      default:
        b.add(b.negative(3, 6), Criterion::max_length(lo - 1), "completeness");
        break;
    }
  }
}

void build_mixed(TaskBuilder& b, int n_rubrics, int max_prompt, int max_response) {
  auto& rng = b.rng();
  auto& task = b.task();
  const int len = std::min(max_prompt, rng.between(4, 8));
  for (int i = 0; i < len; ++i) task.prompt.push_back(b.any_token());

  std::vector<Token> pool(task.prompt.begin(), task.prompt.end());
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  shuffle(pool.begin(), pool.end(), rng);
  const int n_targets = std::min<int>({rng.between(1, 3), static_cast<int>(pool.size()),
                                       std::max(1, max_response - 1)});
  std::vector<Token> targets(pool.begin(), pool.begin() + n_targets);
  std::set<Token> used(targets.begin(), targets.end());

  for (Token t : targets) b.add(b.positive(3, 10), Criterion::contains_token(t), "accuracy");
  const Token lead = targets.front();
  b.add(b.positive(2, 6), Criterion::prefix_is({lead}), "context-awareness");
  const int lo = std::min(max_response, rng.between(n_targets, std::max(n_targets, max_response / 2 + 1)));
  const int hi = rng.between(lo, max_response);
  b.add(b.positive(2, 6), Criterion::min_length(lo), "completeness");
  b.add(b.positive(2, 6), Criterion::max_length(hi), "communication-quality");

  while (static_cast<int>(task.rubrics.size()) < n_rubrics) {
    switch (rng.below(4)) {
      case 0: {
        const Token u = b.token_not_in(used);
        used.insert(u);
        b.add(b.positive(2, 5), Criterion::forbids_token(u), "accuracy");
        break;
      }
      case 1: {
        const Token u = b.token_not_in(used);
        used.insert(u);
        b.add(b.negative(2, 8), Criterion::contains_token(u), "accuracy");
        break;
      }
      case 2: {
        std::set<Token> not_lead{lead};
        b.add(b.negative(2, 6), Criterion::prefix_is({b.token_not_in(not_lead)}), "context-awareness");
        break;
      }
      default:
        b.add(b.negative(2, 6), Criterion::max_length(lo - 1), "completeness");
        break;
    }
  }
}

void add_adversarial(TaskBuilder& b, int extra) {
  auto& rng = b.rng();
  auto& task = b.task();
  for (int i = 0; i < extra; ++i) {
    const int points = b.negative(15, 30);
    switch (rng.below(3)) {
      case 0: {
        // Contradicts a positive contains-token rubric when one exists.
        Token t = b.any_token();
        for (const auto& r : task.rubrics) {
          if (r.points > 0 && r.criterion.kind == CriterionKind::kContainsToken) {
            t = r.criterion.value;
            break;
          }
        }
        b.add(points, Criterion::contains_token(t), "accuracy");
        break;
      }
      case 1:
        b.add(points, Criterion::min_length(rng.between(1, 3)), "communication-quality");
        break;
      default:
        b.add(points, Criterion::contains_token(b.any_token()), "other");
        break;
    }
  }
}

struct FamilyDefaults {
  int min_rubrics;
  int max_rubrics;
};

FamilyDefaults defaults_for(TaskFamily f) {
  switch (f) {
    case TaskFamily::kContains: return {3, 5};
    case TaskFamily::kLength: return {3, 6};
    case TaskFamily::kMixed: return {10, 12};
    case TaskFamily::kAdversarial: return {10, 12};
  }
  return {3, 12};
}

}  // namespace

std::optional<TokenSeq> find_satisfying_response(const Task& task, const Vocabulary& vocab,
                                                 int max_response_length) {
  std::set<Token> mentioned_set, prefix_tokens;
  std::vector<TokenSeq> prefixes{{}};
  for (const auto& r : task.rubrics) {
    const auto& c = r.criterion;
    if (c.kind == CriterionKind::kContainsToken || c.kind == CriterionKind::kForbidsToken) {
      mentioned_set.insert(c.value);
    } else if (c.kind == CriterionKind::kPrefixIs) {
      if (static_cast<int>(c.prefix.size()) <= max_response_length) prefixes.push_back(c.prefix);
      prefix_tokens.insert(c.prefix.begin(), c.prefix.end());
    }
  }
  const std::vector<Token> mentioned(mentioned_set.begin(), mentioned_set.end());
  if (static_cast<int>(mentioned.size()) > kMaxSearchTokens) {
    throw ConfigError("task " + task.id + " mentions too many tokens for exhaustive search");
  }
  std::optional<Token> filler;
  for (Token t = 0; t < vocab.content_size(); ++t) {
    if (!mentioned_set.count(t) && !prefix_tokens.count(t)) {
      filler = t;
      break;
    }
  }

  TokenSeq seq;
  const std::uint32_t subsets = 1u << mentioned.size();
  for (const auto& prefix : prefixes) {
    for (std::uint32_t mask = 0; mask < subsets; ++mask) {
      TokenSeq base = prefix;
      for (std::size_t i = 0; i < mentioned.size(); ++i) {
        if ((mask >> i & 1u) && std::find(base.begin(), base.end(), mentioned[i]) == base.end()) {
          base.push_back(mentioned[i]);
        }
      }
      for (int len = static_cast<int>(base.size()); len <= max_response_length; ++len) {
        const int pad = len - static_cast<int>(base.size());
        if (pad > 0 && !filler && base.empty()) continue;
        const Token pad_token = filler ? *filler : base.back();
        seq = base;
        seq.insert(seq.end(), pad, pad_token);
        if (scores_one(task, seq)) return seq;
        // Leading filler keeps an unprefixed response from matching a prefix rubric.
        if (prefix.empty() && pad > 0 && filler) {
          seq.assign(pad, *filler);
          seq.insert(seq.end(), base.begin(), base.end());
          if (scores_one(task, seq)) return seq;
        }
      }
    }
  }
  return std::nullopt;
}

TaskSet generate_tasks(const TaskGenOptions& options) {
  const Vocabulary vocab(options.vocab_size);
  const auto defaults = defaults_for(options.family);
  const int min_r = options.min_rubrics > 0 ? options.min_rubrics : defaults.min_rubrics;
  const int max_r = options.max_rubrics > 0 ? options.max_rubrics : defaults.max_rubrics;
  if (options.count < 1) throw ConfigError("task count must be at least 1");
  if (min_r < 3 || max_r > 12 || min_r > max_r) {
    throw ConfigError("rubric counts must satisfy 3 <= min <= max <= 12");
  }
  if (options.max_prompt_length < 2) throw ConfigError("max_prompt_length must be at least 2");
  if (options.max_response_length < 2) throw ConfigError("max_response_length must be at least 2");
  if (!(options.quality >= 0.0 && options.quality <= 1.0)) {
    throw ConfigError("quality must lie in [0, 1]");
  }
  if (options.family == TaskFamily::kContains && max_r > vocab.content_size() / 2) {
    throw ConfigError("too many rubrics for the contains family at this vocabulary size");
  }

  const TaskLimits limits{options.vocab_size, options.max_prompt_length, options.max_response_length};
  TaskSet out;
  out.reserve(options.count);
  for (int i = 0; i < options.count; ++i) {
    Rng rng(derive_seed({options.seed, hash_id("task"), hash_id(to_string(options.family)),
                         static_cast<std::uint64_t>(i)}));
    char id[48];
    std::snprintf(id, sizeof(id), "%s-%05d", std::string(to_string(options.family)).c_str(), i);

    bool done = false;
    for (int attempt = 0; attempt < kMaxAttempts && !done; ++attempt) {
      TaskBuilder b(rng, vocab);
      b.task().id = id;
      const bool adversarial = options.family == TaskFamily::kAdversarial;
      const int extra = adversarial ? rng.between(1, 2) : 0;
      const int n = pick_count(rng, min_r, max_r) - extra;
      switch (options.family) {
        case TaskFamily::kContains:
          build_contains(b, n, options.max_prompt_length);
          break;
        case TaskFamily::kLength:
          build_length(b, n, options.max_prompt_length, options.max_response_length);
          break;
        case TaskFamily::kMixed:
        case TaskFamily::kAdversarial:
          build_mixed(b, std::max(n, 4), options.max_prompt_length, options.max_response_length);
          break;
      }
      // The first rubric anchors the task's positive points; the rest may be degraded.
      for (std::size_t k = 1; k < b.task().rubrics.size(); ++k) {
        if (!rng.bernoulli(options.quality)) b.degrade(k);
      }
      if (adversarial) add_adversarial(b, extra);

      Task task = std::move(b.task());
      if (!validate_task(task, limits).empty()) continue;
      auto witness = find_satisfying_response(task, vocab, options.max_response_length);
      if (witness) {
        task.ideal_completion = std::move(witness);
      } else if (adversarial) {
        task.solvable = false;
      } else {
        continue;
      }
      out.push_back(std::move(task));
      done = true;
    }
    if (!done) {
      throw ConfigError("could not generate a solvable task with these knobs (task " +
                        std::string(id) + ")");
    }
  }
  return out;
}

ScoringSet generate_scoring_set(std::span<const Task> tasks, const PolicyParams& reference,
                                int count, std::uint64_t seed, int max_response_length,
                                double temperature) {
  ScoringSet out;
  if (count <= 0) return out;
  if (tasks.empty()) throw InputError("cannot build a scoring set from no tasks");
  out.examples.reserve(count);
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed({seed, hash_id("scoring"), static_cast<std::uint64_t>(i)}));
    const Task& task = tasks[rng.below(tasks.size())];
    ScoringExample ex;
    ex.task_id = task.id;
    ex.prompt = task.prompt;
    ex.rollout = sample(reference, task.prompt, temperature, max_response_length, rng.engine()());
    ex.rollout.task_id = task.id;
    ex.rubric = task.rubrics[rng.below(task.rubrics.size())];
    ex.oracle_label = grade_oracle(ex.rollout, ex.rubric).met;
    (ex.oracle_label ? out.met_count : out.unmet_count)++;
    out.examples.push_back(std::move(ex));
  }
  return out;
}

ScoringSet balance_scoring_set(const ScoringSet& set, std::uint64_t seed) {
  std::vector<std::size_t> met, unmet;
  for (std::size_t i = 0; i < set.examples.size(); ++i) {
    (set.examples[i].oracle_label ? met : unmet).push_back(i);
  }
  Rng rng(derive_seed({seed, hash_id("balance")}));
  shuffle(met.begin(), met.end(), rng);
  shuffle(unmet.begin(), unmet.end(), rng);
  const std::size_t keep = std::min(met.size(), unmet.size());
  std::vector<std::size_t> chosen(met.begin(), met.begin() + keep);
  chosen.insert(chosen.end(), unmet.begin(), unmet.begin() + keep);
  std::sort(chosen.begin(), chosen.end());
  ScoringSet out;
  for (auto i : chosen) out.examples.push_back(set.examples[i]);
  out.met_count = keep;
  out.unmet_count = keep;
  return out;
}

std::vector<SftExample> grading_alignment_examples(const Vocabulary& vocab,
                                                   std::span<const ScoringExample> examples) {
  std::vector<SftExample> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    auto q = make_judge_query(vocab, ex.prompt, ex.rollout, ex.rubric);
    SftExample s{std::move(q.context), std::move(q.rubric_tokens), 0};
    s.scored_from = s.completion.size();
    s.completion.push_back(ex.oracle_label ? vocab.met() : vocab.unmet());
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<SftExample> response_anchor_examples(std::span<const Task> tasks,
                                                 const PolicyParams& reference, int count,
                                                 std::uint64_t seed, int max_response_length) {
  std::vector<SftExample> out;
  if (count <= 0) return out;
  if (tasks.empty()) throw InputError("cannot build anchors from no tasks");
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const Task& task = tasks[static_cast<std::size_t>(i) % tasks.size()];
    auto r = sample(reference, task.prompt, 1.0, max_response_length,
                    derive_seed({seed, hash_id("anchor"), static_cast<std::uint64_t>(i)}));
    out.push_back({task.prompt, std::move(r.tokens), 0});
  }
  return out;
}

void AlignmentOptions::validate() const {
  if (scoring_set_size < 0) throw ConfigError("scoring_set_size must be nonnegative");
  if (steps < 0) throw ConfigError("alignment steps must be nonnegative");
  if (batch_size < 1) throw ConfigError("alignment batch_size must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("alignment learning_rate must be finite and nonnegative");
  }
  if (!(anchor_fraction >= 0.0 && anchor_fraction < 1.0)) {
    throw ConfigError("anchor_fraction must lie in [0, 1)");
  }
  if (interleave_steps < 0) throw ConfigError("interleave_steps must be nonnegative");
}

std::vector<SftExample> build_alignment_set(std::span<const Task> tasks,
                                            const PolicyParams& reference,
                                            const ScoringSet& scoring,
                                            const AlignmentOptions& opts, int max_response_length) {
  opts.validate();
  const auto balanced = balance_scoring_set(scoring, opts.seed);
  auto out = grading_alignment_examples(reference.vocabulary(), balanced.examples);
  const auto judged = static_cast<double>(out.size());
  const int anchors =
      static_cast<int>(std::llround(judged * opts.anchor_fraction / (1.0 - opts.anchor_fraction)));
  auto extra = response_anchor_examples(tasks, reference, anchors, opts.seed, max_response_length);
  out.insert(out.end(), std::make_move_iterator(extra.begin()), std::make_move_iterator(extra.end()));
  return out;
}

std::pair<PolicyParams, std::vector<double>> train_grading_alignment(
    const PolicyParams& params, std::span<const SftExample> examples, const AlignmentOptions& opts) {
  PolicyParams live = params;
  std::vector<double> losses;
  if (examples.empty() || opts.steps <= 0) return {live, losses};
  const std::size_t b = std::min<std::size_t>(std::max(1, opts.batch_size), examples.size());
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed({opts.seed, hash_id("alignment")}));
  shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;
  std::vector<SftExample> batch;
  for (int step = 0; step < opts.steps; ++step) {
    batch.clear();
    for (std::size_t i = 0; i < b; ++i) {
      if (cursor == order.size()) {
        shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(examples[order[cursor++]]);
    }
    auto res = sft_step(live, batch, opts.learning_rate);
    live = std::move(res.params);
    losses.push_back(res.loss);
  }
  return {live, losses};
}

}  // namespace srrl
