#include <gtest/gtest.h>

#include <algorithm>

#include "srrl/core.hpp"
#include "srrl/errors.hpp"
#include "test_util.hpp"

namespace srrl {
namespace {

using testing::rubric;

bool has_issue(const std::vector<std::string>& issues, const std::string& text) {
  return std::find(issues.begin(), issues.end(), text) != issues.end();
}

TEST(Vocabulary, ControlTokensAreDistinctAndAboveContent) {
  for (int v : {16, 32, 100}) {
    Vocabulary vocab(v);
    std::vector<Token> control = {vocab.end(), vocab.judge(), vocab.sep(), vocab.met(),
                                  vocab.unmet(), vocab.kind_contains(), vocab.kind_min_length(),
                                  vocab.kind_max_length(), vocab.kind_forbids(), vocab.kind_prefix()};
    std::sort(control.begin(), control.end());
    EXPECT_EQ(std::unique(control.begin(), control.end()), control.end());
    EXPECT_EQ(control.front(), vocab.content_size());
    EXPECT_EQ(control.back(), v - 1);
    EXPECT_TRUE(vocab.is_content(vocab.content_size() - 1));
    EXPECT_FALSE(vocab.is_content(vocab.end()));
  }
}

TEST(Vocabulary, RejectsTooSmall) { EXPECT_THROW(Vocabulary(15), ConfigError); }

TEST(Criterion, Evaluate) {
  const TokenSeq r = {3, 7, 2};
  EXPECT_TRUE(Criterion::contains_token(7).evaluate(r));
  EXPECT_FALSE(Criterion::contains_token(9).evaluate(r));
  EXPECT_FALSE(Criterion::min_length(5).evaluate(r));
  EXPECT_TRUE(Criterion::min_length(3).evaluate(r));
  EXPECT_TRUE(Criterion::max_length(3).evaluate(r));
  EXPECT_FALSE(Criterion::max_length(2).evaluate(r));
  EXPECT_TRUE(Criterion::forbids_token(0).evaluate(r));
  EXPECT_FALSE(Criterion::forbids_token(3).evaluate(r));
  EXPECT_TRUE(Criterion::prefix_is({3, 7}).evaluate(r));
  EXPECT_FALSE(Criterion::prefix_is({7}).evaluate(r));
  EXPECT_FALSE(Criterion::prefix_is({3, 7, 2, 1}).evaluate(r));
  EXPECT_TRUE(Criterion::prefix_is({}).evaluate(TokenSeq{}));
}

TEST(Criterion, KindNamesRoundTrip) {
  for (auto k : {CriterionKind::kContainsToken, CriterionKind::kMinLength, CriterionKind::kMaxLength,
                 CriterionKind::kForbidsToken, CriterionKind::kPrefixIs}) {
    EXPECT_EQ(criterion_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(criterion_kind_from_string("bogus"), InputError);
  for (auto k : {GraderKind::kOracle, GraderKind::kNoisy, GraderKind::kSelf, GraderKind::kSnapshotSelf}) {
    EXPECT_EQ(grader_kind_from_string(to_string(k)), k);
  }
}

TEST(Rollout, ContentDropsTrailingEnd) {
  Rollout r;
  r.tokens = {1, 2, 31};
  r.ended = true;
  EXPECT_EQ(TokenSeq(r.content().begin(), r.content().end()), (TokenSeq{1, 2}));
  r.ended = false;
  EXPECT_EQ(r.content().size(), 3u);
}

TEST(ValidateTask, OnlyNegativePoints) {
  Task t{"t", {1, 2}, {rubric("a", -3, Criterion::contains_token(1))}, {}, true};
  EXPECT_TRUE(has_issue(validate_task(t), "no positive points"));
}

TEST(ValidateTask, SingleContainsRubricIsValid) {
  Task t{"t", {1, 2}, {rubric("a", 8, Criterion::contains_token(1))}, {}, true};
  EXPECT_TRUE(validate_task(t).empty());
}

TEST(ValidateTask, PromptTooLong) {
  Task t{"t", TokenSeq(17, 1), {rubric("a", 8, Criterion::contains_token(1))}, {}, true};
  EXPECT_TRUE(has_issue(validate_task(t), "prompt too long"));
  TaskLimits wide;
  wide.max_prompt_length = 17;
  EXPECT_TRUE(validate_task(t, wide).empty());
}

TEST(ValidateTask, OtherViolations) {
  Task t{"t", {1, 40}, {}, TokenSeq(9, 1), true};
  auto issues = validate_task(t);
  EXPECT_TRUE(has_issue(issues, "empty rubric set"));
  EXPECT_TRUE(has_issue(issues, "prompt token out of vocabulary"));
  EXPECT_TRUE(has_issue(issues, "ideal completion too long"));

  Task d{"d", {1}, {rubric("a", 2, Criterion::contains_token(1)), rubric("a", 2, Criterion::min_length(1))},
         {}, true};
  EXPECT_TRUE(has_issue(validate_task(d), "duplicate rubric id a"));

  Task z{"z", {1}, {rubric("a", 2, Criterion::contains_token(99)), rubric("b", 0, Criterion::min_length(-1))},
         {}, true};
  issues = validate_task(z);
  EXPECT_TRUE(has_issue(issues, "rubric a token out of vocabulary"));
  EXPECT_TRUE(has_issue(issues, "rubric b has zero points"));
  EXPECT_TRUE(has_issue(issues, "rubric b has a negative length bound"));
}

TEST(ValidateTask, DuplicateCriteriaWithDistinctIdsAreAllowed) {
  Task t{"t", {1}, {rubric("a", 2, Criterion::contains_token(1)), rubric("b", 2, Criterion::contains_token(1))},
         {}, true};
  EXPECT_TRUE(validate_task(t).empty());
}

TEST(TrainerConfig, DefaultsAreValid) {
  TrainerConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.group_size, 4);
  EXPECT_EQ(c.batch_size, 32);
  EXPECT_EQ(c.inner_iterations, 1);
  EXPECT_DOUBLE_EQ(c.clip_low, 0.2);
  EXPECT_DOUBLE_EQ(c.clip_high, 0.28);
  EXPECT_DOUBLE_EQ(c.rollout_temperature, 1.0);
  EXPECT_DOUBLE_EQ(c.grading_temperature, 1.0);
}

TEST(TrainerConfig, RejectsBadValues) {
  auto bad = [](auto mutate) {
    TrainerConfig c;
    mutate(c);
    return c;
  };
  EXPECT_THROW(bad([](TrainerConfig& c) { c.group_size = 1; }).validate(), ConfigError);
  EXPECT_THROW(bad([](TrainerConfig& c) { c.clip_low = 0.0; }).validate(), ConfigError);
  EXPECT_THROW(bad([](TrainerConfig& c) { c.rollout_temperature = -1; }).validate(), ConfigError);
  EXPECT_THROW(bad([](TrainerConfig& c) { c.momentum = 1.0; }).validate(), ConfigError);
  const auto unclipped = bad([](TrainerConfig& c) {
    c.clip_low = c.clip_high = std::numeric_limits<double>::infinity();
  });
  EXPECT_NO_THROW(unclipped.validate());
}

}  // namespace
}  // namespace srrl
