#ifndef SRRL_POLICY_HPP_
#define SRRL_POLICY_HPP_

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "srrl/core.hpp"

namespace srrl {

class Rng;

// Shape of the autoregressive policy. The context fed to the hidden layer is
// the mean prompt embedding m, the embeddings e_1..e_window of the most recent
// response tokens (zero-padded), and, when `interactions` is set, the
// elementwise products m * e_j.
//
// With `segmented`, the prompt is pooled as two means: tokens before the first
// separator token, and the separator onward (zero when there is none). A judge
// query keeps the task prompt and the graded response apart this way; with a
// single mean, a token repeated in the task prompt drowns out whether the
// response contains it. The products let one hidden layer test membership of
// a windowed token, which a purely additive summary cannot express.
struct PolicyDims {
  int vocab = 32;
  int embed = 16;
  int hidden = 32;
  int window = 4;
  bool interactions = true;
  bool segmented = true;

  int segments() const { return segmented ? 2 : 1; }
  int input() const {
    return (segments() + window + (interactions ? segments() * window : 0)) * embed;
  }
  std::size_t param_count() const;

  friend bool operator==(const PolicyDims&, const PolicyDims&) = default;
};

// All parameters live in one flat buffer laid out as
//   embedding [vocab x embed] | w_hidden [input x hidden] | b_hidden [hidden] |
//   w_out [hidden x vocab] | b_out [vocab]
// all row-major. Gradients share the layout.
class PolicyParams {
 public:
  PolicyParams() : PolicyParams(PolicyDims{}) {}
  explicit PolicyParams(PolicyDims dims);  // all zeros: the uniform policy

  // Weights i.i.d. uniform in [-scale, scale], biases zero.
  static PolicyParams random(PolicyDims dims, std::uint64_t seed, double scale = 0.1);

  const PolicyDims& dims() const { return dims_; }
  Vocabulary vocabulary() const { return Vocabulary(dims_.vocab); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  std::span<double> embedding() { return block(0, embedding_size()); }
  std::span<double> w_hidden() { return block(off_w_hidden(), w_hidden_size()); }
  std::span<double> b_hidden() { return block(off_b_hidden(), dims_.hidden); }
  std::span<double> w_out() { return block(off_w_out(), w_out_size()); }
  std::span<double> b_out() { return block(off_b_out(), dims_.vocab); }
  std::span<const double> embedding() const { return block(0, embedding_size()); }
  std::span<const double> w_hidden() const { return block(off_w_hidden(), w_hidden_size()); }
  std::span<const double> b_hidden() const { return block(off_b_hidden(), dims_.hidden); }
  std::span<const double> w_out() const { return block(off_w_out(), w_out_size()); }
  std::span<const double> b_out() const { return block(off_b_out(), dims_.vocab); }

  bool all_finite() const;
  void set_zero();
  PolicyParams& operator+=(const PolicyParams& other);
  PolicyParams& operator*=(double s);

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;

 private:
  std::size_t embedding_size() const { return std::size_t(dims_.vocab) * dims_.embed; }
  std::size_t w_hidden_size() const { return std::size_t(dims_.input()) * dims_.hidden; }
  std::size_t w_out_size() const { return std::size_t(dims_.hidden) * dims_.vocab; }
  std::size_t off_w_hidden() const { return embedding_size(); }
  std::size_t off_b_hidden() const { return off_w_hidden() + w_hidden_size(); }
  std::size_t off_w_out() const { return off_b_hidden() + dims_.hidden; }
  std::size_t off_b_out() const { return off_w_out() + w_out_size(); }
  std::span<double> block(std::size_t off, std::size_t n) { return std::span<double>(data_).subspan(off, n); }
  std::span<const double> block(std::size_t off, std::size_t n) const {
    return std::span<const double>(data_).subspan(off, n);
  }

  PolicyDims dims_;
  std::vector<double> data_;
};

using PolicyGradient = PolicyParams;

// Frozen copy of the parameters. Copies share the same immutable buffer.
class PolicySnapshot {
 public:
  PolicySnapshot(const PolicyParams& params, std::int64_t step)
      : params_(std::make_shared<const PolicyParams>(params)), step_(step) {}

  const PolicyParams& params() const { return *params_; }
  std::int64_t step() const { return step_; }

 private:
  std::shared_ptr<const PolicyParams> params_;
  std::int64_t step_;
};

// Unnormalized scores for the token following `prompt ++ prefix`.
std::vector<double> next_token_logits(const PolicyParams& params, std::span<const Token> prompt,
                                      std::span<const Token> prefix);

// log pi(response[t] | prompt, response[<t]) for every position t.
std::vector<double> logprob(const PolicyParams& params, std::span<const Token> prompt,
                            std::span<const Token> response);

// Accumulates sum_t weights[t] * grad log pi(response[t] | ...) into `grad`.
// Positions with zero weight are evaluated but contribute nothing. Returns the
// per-position log-probabilities.
std::vector<double> accumulate_logprob_grad(const PolicyParams& params,
                                            std::span<const Token> prompt,
                                            std::span<const Token> response,
                                            std::span<const double> weights,
                                            PolicyGradient& grad);

// Gradient of the summed log-probability of `response`.
PolicyGradient grad_logprob(const PolicyParams& params, std::span<const Token> prompt,
                            std::span<const Token> response);

// Draws from softmax(logits / temperature); temperature 0 is argmax with ties
// broken toward the lower id.
Token sample_token(std::span<const double> logits, double temperature, Rng& rng);

// Autoregressive sampling until the end token or `max_len` tokens. The stored
// old_logprobs are always the temperature-1 likelihoods.
Rollout sample(const PolicyParams& params, std::span<const Token> prompt, double temperature,
               int max_len, std::uint64_t seed);

// params + learning_rate * gradient.
PolicyParams apply_update(const PolicyParams& params, const PolicyGradient& gradient,
                          double learning_rate);

// Checkpoints: "SRRLCKPT", u32 version, u32 vocab/embed/hidden/window/
// interactions/segmented, i64 step, u64 count, then `count` little-endian IEEE doubles.
struct Checkpoint {
  PolicyParams params;
  std::int64_t step = 0;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const PolicyParams& params, std::int64_t step);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const PolicyParams& params, std::int64_t step);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace srrl

#endif  // SRRL_POLICY_HPP_
