#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "srrl/errors.hpp"
#include "srrl/policy.hpp"
#include "test_util.hpp"

namespace srrl {
namespace {

using testing::max_rel_error;
using testing::numeric_gradient;
using testing::random_tokens;
using testing::small_dims;

double summed_logprob(const PolicyParams& p, const TokenSeq& prompt, const TokenSeq& response) {
  double s = 0.0;
  for (double x : logprob(p, prompt, response)) s += x;
  return s;
}

TEST(Policy, UniformParamsGiveLogV) {
  PolicyParams p;  // all zeros
  const auto lp = logprob(p, TokenSeq{1, 2, 3}, TokenSeq{4, 5, 31});
  for (double x : lp) EXPECT_NEAR(x, -std::log(32.0), 1e-15);
}

TEST(Policy, PositionDistributionsNormalize) {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = PolicyParams::random(PolicyDims{}, trial, 0.5);
    const auto prompt = random_tokens(rng, 32, 0, 16);
    auto response = random_tokens(rng, 32, 1, 8);
    const std::size_t pos = rng.below(response.size());
    double total = 0.0;
    for (Token alt = 0; alt < 32; ++alt) {
      response[pos] = alt;
      total += std::exp(logprob(p, prompt, response)[pos]);
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Policy, ZeroParamsSingleTokenBiasGradient) {
  PolicyParams p;
  const auto g = grad_logprob(p, TokenSeq{3}, TokenSeq{5});
  const auto gb = g.b_out();
  for (int k = 0; k < 32; ++k) EXPECT_NEAR(gb[k], (k == 5 ? 1.0 : 0.0) - 1.0 / 32, 1e-15);
}

struct DimsCase {
  bool interactions;
  bool segmented;
};

class GradLogprobFd : public ::testing::TestWithParam<DimsCase> {};

TEST_P(GradLogprobFd, MatchesCentralDifferences) {
  const auto c = GetParam();
  auto dims = small_dims();
  dims.interactions = c.interactions;
  dims.segmented = c.segmented;
  const Vocabulary vocab(dims.vocab);
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = PolicyParams::random(dims, 100 + trial, 0.6);
    auto prompt = random_tokens(rng, dims.vocab, 0, 7);
    // Judge-shaped prompts exercise the second pooled segment.
    if (trial % 2 == 1) {
      prompt.insert(prompt.begin() + rng.below(prompt.size() + 1), vocab.sep());
    }
    const auto response = random_tokens(rng, dims.vocab, 1, 5);
    const auto analytic = grad_logprob(p, prompt, response);
    const auto numeric =
        numeric_gradient(p, [&](const PolicyParams& q) { return summed_logprob(q, prompt, response); });
    EXPECT_LE(max_rel_error(analytic.data(), numeric), 1e-4) << "trial " << trial;
  }
}

INSTANTIATE_TEST_SUITE_P(Variants, GradLogprobFd,
                         ::testing::Values(DimsCase{true, true}, DimsCase{true, false},
                                           DimsCase{false, true}, DimsCase{false, false}),
                         [](const ::testing::TestParamInfo<DimsCase>& info) {
                           return std::string(info.param.interactions ? "Products" : "NoProducts") +
                                  (info.param.segmented ? "Segmented" : "Pooled");
                         });

TEST(Policy, AccumulateHonoursWeights) {
  const auto p = PolicyParams::random(small_dims(), 3, 0.5);
  const TokenSeq prompt = {1, 2}, response = {3, 4, 5};
  PolicyGradient g(p.dims());
  const std::vector<double> w = {0.0, 2.0, 0.0};
  accumulate_logprob_grad(p, prompt, response, w, g);
  // Only position 1 contributes: compare to a finite difference of 2 * logprob[1].
  const auto numeric = numeric_gradient(
      p, [&](const PolicyParams& q) { return 2.0 * logprob(q, prompt, response)[1]; });
  EXPECT_LE(max_rel_error(g.data(), numeric), 1e-4);
}

TEST(Policy, InputsLayoutSize) {
  PolicyDims d;
  EXPECT_EQ(d.input(), (2 + 4 + 2 * 4) * 16);
  d.segmented = false;
  EXPECT_EQ(d.input(), (1 + 4 + 4) * 16);
  d.interactions = false;
  EXPECT_EQ(d.input(), 5 * 16);
  EXPECT_EQ(PolicyParams(d).data().size(), d.param_count());
}

TEST(Policy, SegmentedPoolingSeparatesJudgeResponse) {
  // Moving a token across the separator changes the output only when the
  // context is pooled per segment.
  for (bool segmented : {true, false}) {
    PolicyDims d;
    d.segmented = segmented;
    const auto p = PolicyParams::random(d, 5, 0.5);
    const Vocabulary v(32);
    const auto a = next_token_logits(p, TokenSeq{v.judge(), 3, v.sep(), 4, v.sep()}, TokenSeq{});
    const auto b = next_token_logits(p, TokenSeq{v.judge(), 4, v.sep(), 3, v.sep()}, TokenSeq{});
    EXPECT_EQ(a == b, !segmented);
  }
}

TEST(Policy, OutOfVocabularyIsInputError) {
  PolicyParams p;
  EXPECT_THROW(logprob(p, TokenSeq{32}, TokenSeq{1}), InputError);
  EXPECT_THROW(logprob(p, TokenSeq{1}, TokenSeq{-1}), InputError);
  EXPECT_THROW(sample(p, TokenSeq{99}, 1.0, 4, 0), InputError);
}

TEST(Sampling, GreedyIsSeedIndependent) {
  const auto p = PolicyParams::random(PolicyDims{}, 1, 0.5);
  const TokenSeq prompt = {1, 2, 3};
  const auto a = sample(p, prompt, 0.0, 8, 1);
  const auto b = sample(p, prompt, 0.0, 8, 987654);
  EXPECT_EQ(a, b);
}

TEST(Sampling, SeededDeterminismAndStoredLogprobs) {
  const auto p = PolicyParams::random(PolicyDims{}, 2, 0.5);
  const TokenSeq prompt = {4, 4, 9};
  const auto a = sample(p, prompt, 1.0, 8, 42);
  EXPECT_EQ(a, sample(p, prompt, 1.0, 8, 42));
  EXPECT_EQ(a.old_logprobs, logprob(p, prompt, a.tokens));
  // Stored log-probabilities are temperature-1 likelihoods whatever the sampling temperature.
  const auto cold = sample(p, prompt, 0.3, 8, 42);
  EXPECT_EQ(cold.old_logprobs, logprob(p, prompt, cold.tokens));
  EXPECT_LE(a.tokens.size(), 8u);
  if (a.ended) {
    EXPECT_EQ(a.tokens.back(), Vocabulary().end());
  }
}

TEST(Sampling, ArgmaxTieGoesToLowerId) {
  Rng rng(0);
  const std::vector<double> logits = {0.0, 2.0, 1.0, 2.0};
  EXPECT_EQ(sample_token(logits, 0.0, rng), 1);
}

TEST(Sampling, FrequenciesFollowSoftmax) {
  Rng rng(123);
  const std::vector<double> logits = {0.0, 1.0, -1.0, 0.5};
  const double temp = 0.7;
  std::vector<double> expect(4);
  double z = 0.0;
  for (int k = 0; k < 4; ++k) z += expect[k] = std::exp(logits[k] / temp);
  const int n = 200000;
  std::vector<int> counts(4, 0);
  for (int i = 0; i < n; ++i) ++counts[sample_token(logits, temp, rng)];
  for (int k = 0; k < 4; ++k) {
    const double pk = expect[k] / z;
    const double sd = std::sqrt(pk * (1 - pk) / n);
    EXPECT_NEAR(counts[k] / double(n), pk, 5 * sd);
  }
}

TEST(Update, IdentityCases) {
  const auto p = PolicyParams::random(PolicyDims{}, 9);
  PolicyGradient zero(p.dims());
  EXPECT_EQ(apply_update(p, zero, 1.0), p);
  auto g = grad_logprob(p, TokenSeq{1}, TokenSeq{2, 3});
  EXPECT_EQ(apply_update(p, g, 0.0), p);
  const auto moved = apply_update(p, g, 0.5);
  for (std::size_t i = 0; i < p.data().size(); ++i) {
    EXPECT_EQ(moved.data()[i], p.data()[i] + 0.5 * g.data()[i]);
  }
}

TEST(Update, NonFiniteGradientIsNumericError) {
  const auto p = PolicyParams::random(PolicyDims{}, 9);
  PolicyGradient g(p.dims());
  g.data()[17] = std::nan("");
  EXPECT_THROW(apply_update(p, g, 1.0), NumericError);
  g.data()[17] = INFINITY;
  EXPECT_THROW(apply_update(p, g, 1.0), NumericError);
}

TEST(Update, ShapeMismatch) {
  EXPECT_THROW(apply_update(PolicyParams(PolicyDims{}), PolicyGradient(small_dims()), 1.0), InputError);
}

TEST(Checkpoint, RoundTripIsExact) {
  auto dims = small_dims();
  dims.segmented = false;
  const auto p = PolicyParams::random(dims, 77, 0.3);
  std::stringstream ss;
  write_checkpoint(ss, p, 123);
  const auto back = read_checkpoint(ss);
  EXPECT_EQ(back.step, 123);
  EXPECT_EQ(back.params.dims(), dims);
  EXPECT_EQ(back.params, p);
}

TEST(Checkpoint, HeaderLayout) {
  const auto p = PolicyParams::random(PolicyDims{}, 1);
  std::stringstream ss;
  write_checkpoint(ss, p, 7);
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 8), "SRRLCKPT");
  std::uint32_t version = 0, vocab = 0;
  std::memcpy(&version, bytes.data() + 8, 4);
  std::memcpy(&vocab, bytes.data() + 12, 4);
  EXPECT_EQ(version, kCheckpointVersion);
  EXPECT_EQ(vocab, 32u);
  // magic, version, six dims fields, step, count, then the doubles.
  EXPECT_EQ(bytes.size(), 8 + 4 + 6 * 4 + 8 + 8 + p.data().size() * 8);
}

TEST(Checkpoint, RejectsCorruption) {
  const auto p = PolicyParams::random(small_dims(), 1);
  std::stringstream ss;
  write_checkpoint(ss, p, 0);
  std::string bytes = ss.str();
  {
    std::stringstream bad(bytes.substr(0, bytes.size() - 3));
    EXPECT_THROW(read_checkpoint(bad), InputError);
  }
  {
    std::string wrong = bytes;
    wrong[0] = 'X';
    std::stringstream bad(wrong);
    EXPECT_THROW(read_checkpoint(bad), InputError);
  }
  {
    std::string future = bytes;
    future[8] = 9;
    std::stringstream bad(future);
    EXPECT_THROW(read_checkpoint(bad), InputError);
  }
}

}  // namespace
}  // namespace srrl
