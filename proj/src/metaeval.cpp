#include "srrl/metaeval.hpp"

#include <algorithm>
#include <limits>

#include "srrl/errors.hpp"
#include "srrl/rng.hpp"

namespace srrl {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

ClassStats class_stats(std::size_t tp, std::size_t fp, std::size_t fn) {
  return {ratio(tp, tp + fp), ratio(tp, tp + fn), ratio(2 * tp, 2 * tp + fp + fn)};
}

}  // namespace

MetaEvalResult macro_f1(const std::vector<bool>& predictions, const std::vector<bool>& labels) {
  if (predictions.size() != labels.size()) {
    throw InputError("predictions and labels differ in length");
  }
  if (labels.empty()) throw InputError("macro F1 needs at least one judgment");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool p = predictions[i], l = labels[i];
    if (p && l) ++tp;
    else if (p) ++fp;
    else if (l) ++fn;
    else ++tn;
  }
  MetaEvalResult r;
  r.met = class_stats(tp, fp, fn);
  // For the unmet class the roles of the confusion cells swap.
  r.unmet = class_stats(tn, fn, fp);
  r.macro_f1 = (r.met.f1 + r.unmet.f1) / 2.0;
  r.n_judgments = labels.size();
  r.single_class = (tp + fn == 0) || (tn + fp == 0);
  return r;
}

MetaEvalResult meta_eval_grader(const Grader& grader, std::span<const ScoringExample> eval_set,
                                double grading_temperature, std::uint64_t seed, int workers) {
  if (eval_set.empty()) throw InputError("meta-evaluation set is empty");
  Grader g = grader;
  const bool self_kind =
      g.spec.kind == GraderKind::kSelf || g.spec.kind == GraderKind::kSnapshotSelf;
  if (self_kind) g.spec.grading_temperature = grading_temperature;

  std::vector<GradeRequest> requests;
  requests.reserve(eval_set.size());
  for (std::size_t i = 0; i < eval_set.size(); ++i) {
    const auto& ex = eval_set[i];
    requests.push_back({ex.prompt, &ex.rollout, &ex.rubric,
                        derive_seed({seed, hash_id("meta-eval"), i})});
  }
  GradingOptions opts;
  opts.workers = workers;
  const auto graded = grade_batch(requests, g, opts);

  std::vector<bool> predictions(eval_set.size()), labels(eval_set.size());
  for (std::size_t i = 0; i < eval_set.size(); ++i) {
    predictions[i] = graded.verdicts[i].met;
    labels[i] = eval_set[i].oracle_label;
  }
  auto result = macro_f1(predictions, labels);
  result.grader_kind = g.spec.kind;
  result.grading_temperature = self_kind ? grading_temperature : 0.0;
  return result;
}

std::vector<MetaEvalResult> temperature_sweep(const PolicySnapshot& snapshot,
                                              std::span<const ScoringExample> eval_set,
                                              std::span<const double> temperatures,
                                              std::uint64_t seed, int workers) {
  std::vector<MetaEvalResult> out;
  Grader grader{{}, snapshot};
  grader.spec.kind = GraderKind::kSnapshotSelf;
  for (double t : temperatures) out.push_back(meta_eval_grader(grader, eval_set, t, seed, workers));
  return out;
}

double min_judge_margin(const PolicyParams& params, std::span<const ScoringExample> eval_set) {
  const auto vocab = params.vocabulary();
  double m = std::numeric_limits<double>::infinity();
  for (const auto& ex : eval_set) {
    m = std::min(m, judge_logit_margin(params, make_judge_query(vocab, ex.prompt, ex.rollout, ex.rubric)));
  }
  return m;
}

PolicyParams sharpen_judge(const PolicyParams& params, std::span<const ScoringExample> eval_set,
                           double target_margin) {
  const double current = min_judge_margin(params, eval_set);
  if (!(current > 0.0)) throw NumericError("a judge query has tied top logits; cannot sharpen");
  PolicyParams out = params;
  if (current >= target_margin) return out;
  // Logits are linear in the output layer, so scaling it scales every margin.
  const double factor = target_margin / current * 1.001;
  for (double& w : out.w_out()) w *= factor;
  for (double& b : out.b_out()) b *= factor;
  return out;
}

}  // namespace srrl
