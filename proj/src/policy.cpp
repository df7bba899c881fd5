#include "srrl/policy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "srrl/errors.hpp"
#include "srrl/rng.hpp"

namespace srrl {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

std::size_t PolicyDims::param_count() const {
  const std::size_t v = vocab, d = embed, h = hidden, in = input();
  return v * d + in * h + h + h * v + v;
}

PolicyParams::PolicyParams(PolicyDims dims) : dims_(dims) {
  if (dims.vocab < Vocabulary::kMinSize || dims.embed < 1 || dims.hidden < 1 || dims.window < 0) {
    throw ConfigError("invalid policy dimensions");
  }
  data_.assign(dims.param_count(), 0.0);
}

PolicyParams PolicyParams::random(PolicyDims dims, std::uint64_t seed, double scale) {
  PolicyParams p(dims);
  Rng rng(derive_seed({seed, hash_id("policy-init")}));
  for (double& w : p.embedding()) w = rng.uniform(-scale, scale);
  for (double& w : p.w_hidden()) w = rng.uniform(-scale, scale);
  for (double& w : p.w_out()) w = rng.uniform(-scale, scale);
  return p;
}

bool PolicyParams::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

void PolicyParams::set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

PolicyParams& PolicyParams::operator+=(const PolicyParams& other) {
  if (!(dims_ == other.dims_)) throw InputError("parameter shapes differ");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

PolicyParams& PolicyParams::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

namespace {

void check_tokens(const PolicyDims& dims, std::span<const Token> tokens, const char* what) {
  for (Token t : tokens) {
    if (t < 0 || t >= dims.vocab) {
      throw InputError(std::string(what) + " token " + std::to_string(t) +
                       " is outside the vocabulary of size " + std::to_string(dims.vocab));
    }
  }
}

// Per-sequence forward state: the pooled prompt summary is shared by all
// positions. Input layout: segment means | window embeddings | products
// (window slot major, segment minor).
class ContextEncoder {
 public:
  ContextEncoder(const PolicyParams& params, std::span<const Token> prompt)
      : params_(params), dims_(params.dims()), prompt_(prompt) {
    const int d = dims_.embed;
    const int segments = dims_.segments();
    means_.assign(std::size_t(segments) * d, 0.0);
    counts_.assign(segments, 0);
    segment_of_.resize(prompt.size());
    const Token sep = params.vocabulary().sep();
    const auto emb = params.embedding();
    int seg = 0;
    for (std::size_t i = 0; i < prompt.size(); ++i) {
      if (segments > 1 && prompt[i] == sep) seg = 1;
      segment_of_[i] = seg;
      ++counts_[seg];
      const double* e = emb.data() + std::size_t(prompt[i]) * d;
      for (int c = 0; c < d; ++c) means_[std::size_t(seg) * d + c] += e[c];
    }
    for (int s = 0; s < segments; ++s) {
      if (counts_[s] == 0) continue;
      const double inv = 1.0 / counts_[s];
      for (int c = 0; c < d; ++c) means_[std::size_t(s) * d + c] *= inv;
    }
  }

  // Fills x, hidden, logits for predicting response[t] given response[<t].
  void forward(std::span<const Token> response, std::size_t t, std::vector<double>& x,
               std::vector<double>& hidden, std::vector<double>& logits) const {
    const int d = dims_.embed, h = dims_.hidden, v = dims_.vocab, in = dims_.input();
    const int segments = dims_.segments();
    x.assign(in, 0.0);
    std::copy(means_.begin(), means_.end(), x.begin());
    const auto emb = params_.embedding();
    for (int j = 0; j < dims_.window; ++j) {
      const auto back = static_cast<std::ptrdiff_t>(t) - 1 - j;
      if (back < 0) break;
      const Token tok = response[static_cast<std::size_t>(back)];
      const double* e = emb.data() + std::size_t(tok) * d;
      std::copy_n(e, d, x.begin() + (segments + j) * d);
      if (!dims_.interactions) continue;
      for (int s = 0; s < segments; ++s) {
        double* prod = x.data() + product_offset(j, s);
        const double* m = means_.data() + std::size_t(s) * d;
        for (int c = 0; c < d; ++c) prod[c] = m[c] * e[c];
      }
    }

    const auto w1 = params_.w_hidden();
    const auto b1 = params_.b_hidden();
    hidden.assign(b1.begin(), b1.end());
    for (int i = 0; i < in; ++i) {
      const double xi = x[i];
      if (xi == 0.0) continue;
      const double* row = w1.data() + std::size_t(i) * h;
      for (int j = 0; j < h; ++j) hidden[j] += xi * row[j];
    }
    for (double& z : hidden) z = std::tanh(z);

    const auto w2 = params_.w_out();
    const auto b2 = params_.b_out();
    logits.assign(b2.begin(), b2.end());
    for (int j = 0; j < h; ++j) {
      const double hj = hidden[j];
      const double* row = w2.data() + std::size_t(j) * v;
      for (int k = 0; k < v; ++k) logits[k] += hj * row[k];
    }
  }

  // Backpropagates d(objective)/d(logits) = g_logits through one position.
  void backward(std::span<const Token> response, std::size_t t, const std::vector<double>& x,
                const std::vector<double>& hidden, const std::vector<double>& g_logits,
                PolicyGradient& grad) const {
    const int d = dims_.embed, h = dims_.hidden, v = dims_.vocab, in = dims_.input();
    const int segments = dims_.segments();
    auto gb2 = grad.b_out();
    auto gw2 = grad.w_out();
    const auto w2 = params_.w_out();
    std::vector<double> g_z(h, 0.0);
    for (int k = 0; k < v; ++k) gb2[k] += g_logits[k];
    for (int j = 0; j < h; ++j) {
      double acc = 0.0;
      const double* row = w2.data() + std::size_t(j) * v;
      double* grow = gw2.data() + std::size_t(j) * v;
      for (int k = 0; k < v; ++k) {
        grow[k] += hidden[j] * g_logits[k];
        acc += row[k] * g_logits[k];
      }
      g_z[j] = acc * (1.0 - hidden[j] * hidden[j]);
    }

    auto gb1 = grad.b_hidden();
    auto gw1 = grad.w_hidden();
    const auto w1 = params_.w_hidden();
    std::vector<double> g_x(in, 0.0);
    for (int j = 0; j < h; ++j) gb1[j] += g_z[j];
    for (int i = 0; i < in; ++i) {
      const double* row = w1.data() + std::size_t(i) * h;
      double* grow = gw1.data() + std::size_t(i) * h;
      double acc = 0.0;
      for (int j = 0; j < h; ++j) {
        grow[j] += x[i] * g_z[j];
        acc += row[j] * g_z[j];
      }
      g_x[i] = acc;
    }

    auto gemb = grad.embedding();
    const auto emb = params_.embedding();
    std::vector<double> g_means(g_x.begin(), g_x.begin() + std::ptrdiff_t(segments) * d);
    for (int j = 0; j < dims_.window; ++j) {
      const auto back = static_cast<std::ptrdiff_t>(t) - 1 - j;
      if (back < 0) break;
      const Token tok = response[static_cast<std::size_t>(back)];
      double* ge = gemb.data() + std::size_t(tok) * d;
      const double* g_slot = g_x.data() + (segments + j) * d;
      for (int c = 0; c < d; ++c) ge[c] += g_slot[c];
      if (!dims_.interactions) continue;
      const double* e = emb.data() + std::size_t(tok) * d;
      for (int s = 0; s < segments; ++s) {
        const double* g_prod = g_x.data() + product_offset(j, s);
        const double* m = means_.data() + std::size_t(s) * d;
        double* gm = g_means.data() + std::size_t(s) * d;
        for (int c = 0; c < d; ++c) {
          ge[c] += g_prod[c] * m[c];
          gm[c] += g_prod[c] * e[c];
        }
      }
    }
    for (std::size_t i = 0; i < prompt_.size(); ++i) {
      const int s = segment_of_[i];
      const double inv = 1.0 / counts_[s];
      double* ge = gemb.data() + std::size_t(prompt_[i]) * d;
      const double* gm = g_means.data() + std::size_t(s) * d;
      for (int c = 0; c < d; ++c) ge[c] += gm[c] * inv;
    }
  }

 private:
  std::size_t product_offset(int slot, int segment) const {
    const int segments = dims_.segments();
    return std::size_t(segments + dims_.window + slot * segments + segment) * dims_.embed;
  }

  const PolicyParams& params_;
  const PolicyDims& dims_;
  std::span<const Token> prompt_;
  std::vector<double> means_;
  std::vector<int> counts_;
  std::vector<int> segment_of_;
};

double log_sum_exp(std::span<const double> xs) {
  const double m = *std::max_element(xs.begin(), xs.end());
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

std::vector<double> next_token_logits(const PolicyParams& params, std::span<const Token> prompt,
                                      std::span<const Token> prefix) {
  check_tokens(params.dims(), prompt, "prompt");
  check_tokens(params.dims(), prefix, "prefix");
  ContextEncoder enc(params, prompt);
  std::vector<double> x, hidden, logits;
  enc.forward(prefix, prefix.size(), x, hidden, logits);
  return logits;
}

std::vector<double> logprob(const PolicyParams& params, std::span<const Token> prompt,
                            std::span<const Token> response) {
  if (response.empty()) throw InputError("response must be nonempty");
  check_tokens(params.dims(), prompt, "prompt");
  check_tokens(params.dims(), response, "response");
  ContextEncoder enc(params, prompt);
  std::vector<double> out(response.size());
  std::vector<double> x, hidden, logits;
  for (std::size_t t = 0; t < response.size(); ++t) {
    enc.forward(response, t, x, hidden, logits);
    out[t] = logits[response[t]] - log_sum_exp(logits);
  }
  return out;
}

std::vector<double> accumulate_logprob_grad(const PolicyParams& params,
                                            std::span<const Token> prompt,
                                            std::span<const Token> response,
                                            std::span<const double> weights,
                                            PolicyGradient& grad) {
  if (response.empty()) throw InputError("response must be nonempty");
  if (weights.size() != response.size()) throw InputError("one weight per response token required");
  if (!(grad.dims() == params.dims())) throw InputError("gradient shape does not match parameters");
  check_tokens(params.dims(), prompt, "prompt");
  check_tokens(params.dims(), response, "response");

  ContextEncoder enc(params, prompt);
  std::vector<double> out(response.size());
  std::vector<double> x, hidden, logits, g_logits;
  for (std::size_t t = 0; t < response.size(); ++t) {
    enc.forward(response, t, x, hidden, logits);
    const double lse = log_sum_exp(logits);
    out[t] = logits[response[t]] - lse;
    const double w = weights[t];
    if (w == 0.0) continue;
    // d log softmax(y) / d logits = onehot(y) - softmax
    g_logits.resize(logits.size());
    for (std::size_t k = 0; k < logits.size(); ++k) g_logits[k] = -w * std::exp(logits[k] - lse);
    g_logits[response[t]] += w;
    enc.backward(response, t, x, hidden, g_logits, grad);
  }
  return out;
}

PolicyGradient grad_logprob(const PolicyParams& params, std::span<const Token> prompt,
                            std::span<const Token> response) {
  PolicyGradient grad(params.dims());
  const std::vector<double> ones(response.size(), 1.0);
  accumulate_logprob_grad(params, prompt, response, ones, grad);
  return grad;
}

Token sample_token(std::span<const double> logits, double temperature, Rng& rng) {
  if (temperature <= 0.0) {
    return static_cast<Token>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> w(logits.size());
  double total = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    w[k] = std::exp((logits[k] - m) / temperature);
    total += w[k];
  }
  double u = rng.uniform() * total;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (u < w[k]) return static_cast<Token>(k);
    u -= w[k];
  }
  // Rounding left u past the last bucket; return the last nonzero-weight token.
  for (std::size_t k = w.size(); k-- > 0;) {
    if (w[k] > 0.0) return static_cast<Token>(k);
  }
  return 0;
}

Rollout sample(const PolicyParams& params, std::span<const Token> prompt, double temperature,
               int max_len, std::uint64_t seed) {
  if (max_len < 1) throw InputError("max_len must be at least 1");
  if (!(temperature >= 0.0)) throw InputError("temperature must be nonnegative");
  check_tokens(params.dims(), prompt, "prompt");
  const Token end = params.vocabulary().end();
  Rng rng(seed);
  ContextEncoder enc(params, prompt);
  Rollout r;
  std::vector<double> x, hidden, logits;
  while (static_cast<int>(r.tokens.size()) < max_len) {
    enc.forward(r.tokens, r.tokens.size(), x, hidden, logits);
    const Token tok = sample_token(logits, temperature, rng);
    r.old_logprobs.push_back(logits[tok] - log_sum_exp(logits));
    r.tokens.push_back(tok);
    if (tok == end) {
      r.ended = true;
      break;
    }
  }
  return r;
}

PolicyParams apply_update(const PolicyParams& params, const PolicyGradient& gradient,
                          double learning_rate) {
  if (!(params.dims() == gradient.dims())) throw InputError("gradient shape does not match parameters");
  if (!gradient.all_finite()) throw NumericError("gradient has non-finite entries");
  PolicyParams out = params;
  auto dst = out.data();
  const auto g = gradient.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += learning_rate * g[i];
  return out;
}

namespace {

constexpr char kMagic[8] = {'S', 'R', 'R', 'L', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw InputError("truncated checkpoint");
  }
  return value;
}

}  // namespace

void write_checkpoint(std::ostream& out, const PolicyParams& params, std::int64_t step) {
  const auto& d = params.dims();
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(d.vocab));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(d.embed));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(d.hidden));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(d.window));
  put<std::uint32_t>(out, d.interactions ? 1u : 0u);
  put<std::uint32_t>(out, d.segmented ? 1u : 0u);
  put<std::int64_t>(out, step);
  const auto data = params.data();
  put<std::uint64_t>(out, data.size());
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw InputError("not a policy checkpoint");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw InputError("unsupported checkpoint version " + std::to_string(version));
  }
  PolicyDims dims;
  dims.vocab = static_cast<int>(get<std::uint32_t>(in));
  dims.embed = static_cast<int>(get<std::uint32_t>(in));
  dims.hidden = static_cast<int>(get<std::uint32_t>(in));
  dims.window = static_cast<int>(get<std::uint32_t>(in));
  dims.interactions = get<std::uint32_t>(in) != 0;
  dims.segmented = get<std::uint32_t>(in) != 0;
  Checkpoint ckpt{PolicyParams(dims), get<std::int64_t>(in)};
  const auto count = get<std::uint64_t>(in);
  auto data = ckpt.params.data();
  if (count != data.size()) throw InputError("checkpoint parameter count does not match its header");
  if (!in.read(reinterpret_cast<char*>(data.data()),
               static_cast<std::streamsize>(count * sizeof(double)))) {
    throw InputError("truncated checkpoint");
  }
  return ckpt;
}

void save_checkpoint(const std::string& path, const PolicyParams& params, std::int64_t step) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write checkpoint " + path);
  write_checkpoint(out, params, step);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read checkpoint " + path);
  return read_checkpoint(in);
}

}  // namespace srrl
