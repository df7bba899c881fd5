#include "srrl/harness.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>

#include "srrl/errors.hpp"
#include "srrl/parallel.hpp"
#include "srrl/rng.hpp"

#ifndef SRRL_VERSION
#define SRRL_VERSION "0.0.0"
#endif

namespace srrl {

namespace fs = std::filesystem;

std::string version_string() { return SRRL_VERSION; }

namespace {

const char* backend_name(GradingBackend b) {
  return b == GradingBackend::kColocated ? "colocated" : "simulated-remote";
}

GradingBackend backend_from_string(const std::string& s) {
  if (s == "colocated") return GradingBackend::kColocated;
  if (s == "simulated-remote") return GradingBackend::kSimulatedRemote;
  throw ConfigError("unknown grading backend '" + s + "'");
}

// Reads `key` from `j` into `out` when present; wrong types are config errors.
template <typename T>
void take(const json& j, const char* section, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(section) + "." + key + " has the wrong type");
  }
}

void reject_unknown(const json& j, const char* section, const json& reference) {
  if (!j.is_object()) throw ConfigError(std::string(section) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!reference.contains(key)) throw ConfigError("unknown key " + std::string(section) + "." + key);
  }
}

json grader_json(const GraderSpec& g) {
  return {{"kind", std::string(to_string(g.kind))},
          {"flip_prob_fp", g.flip_prob_fp},
          {"flip_prob_fn", g.flip_prob_fn},
          {"fp_scope", std::string(to_string(g.fp_scope))},
          {"fn_scope", std::string(to_string(g.fn_scope))}};
}

json dataset_json(const DatasetConfig& d) {
  const auto& g = d.generate;
  return {{"tasks_path", d.tasks_path},
          {"family", std::string(to_string(g.family))},
          {"count", g.count},
          {"seed", g.seed},
          {"vocab_size", g.vocab_size},
          {"max_prompt_length", g.max_prompt_length},
          {"max_response_length", g.max_response_length},
          {"min_rubrics", g.min_rubrics},
          {"max_rubrics", g.max_rubrics},
          {"quality", g.quality}};
}

json policy_json(const PolicyConfig& p) {
  return {{"vocab", p.dims.vocab},
          {"embed", p.dims.embed},
          {"hidden", p.dims.hidden},
          {"window", p.dims.window},
          {"interactions", p.dims.interactions},
          {"segmented", p.dims.segmented},
          {"init_scale", p.init_scale},
          {"init_checkpoint", p.init_checkpoint}};
}

json alignment_json(const AlignmentOptions& a) {
  return {{"scoring_set_size", a.scoring_set_size},
          {"steps", a.steps},
          {"batch_size", a.batch_size},
          {"learning_rate", a.learning_rate},
          {"anchor_fraction", a.anchor_fraction},
          {"interleave_steps", a.interleave_steps},
          {"seed", a.seed}};
}

json sft_json(const SftConfig& s) {
  return {{"steps", s.steps}, {"batch_size", s.batch_size}, {"learning_rate", s.learning_rate}};
}

json harness_json(const HarnessConfig& h) {
  return {{"workers", h.workers},
          {"checkpoint_every", h.checkpoint_every},
          {"metaeval_every", h.metaeval_every},
          {"metaeval_set_size", h.metaeval_set_size},
          {"grading_backend", backend_name(h.grading_backend)},
          {"injected_latency", h.injected_latency},
          {"log_verdicts", h.log_verdicts}};
}

std::string checkpoint_name(std::int64_t step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "step-%06lld.bin", static_cast<long long>(step));
  return buf;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create directory " + dir + ": " + ec.message());
}

std::vector<VerdictRecord> verdict_records(std::int64_t step, const StepTrace& trace) {
  std::vector<VerdictRecord> out;
  for (const auto& g : trace.rollouts) {
    const auto& task = trace.tasks.at(g.task_index);
    for (std::size_t k = 0; k < g.verdicts.size(); ++k) {
      VerdictRecord v;
      v.step = step;
      v.task_id = task.id;
      v.group_index = g.rollout.group_index;
      v.rubric_id = g.verdicts[k].rubric_id;
      v.met = g.verdicts[k].met;
      v.grader_kind = g.verdicts[k].grader_kind;
      v.elapsed_time = k < g.grade_elapsed.size() ? g.grade_elapsed[k] : 0.0;
      out.push_back(std::move(v));
    }
  }
  return out;
}

}  // namespace

void RunConfig::validate() const {
  trainer.validate();
  grader.validate();
  alignment.validate();
  if (policy.dims.vocab != dataset.generate.vocab_size) {
    throw ConfigError("policy.vocab and dataset.vocab_size differ");
  }
  if (!(policy.init_scale >= 0.0)) throw ConfigError("policy.init_scale must be nonnegative");
  if (sft.steps < 0 || sft.batch_size < 1 || !(sft.learning_rate >= 0.0)) {
    throw ConfigError("invalid sft section");
  }
  if (harness.workers < 1) throw ConfigError("harness.workers must be positive");
  if (harness.checkpoint_every < 0 || harness.metaeval_every < 0) {
    throw ConfigError("harness intervals must be nonnegative");
  }
  if (harness.metaeval_set_size < 1) throw ConfigError("harness.metaeval_set_size must be positive");
  if (!(harness.injected_latency >= 0.0)) throw ConfigError("harness.injected_latency must be nonnegative");
}

json to_json(const RunConfig& c) {
  return {{"trainer", to_json(c.trainer)},         {"grader", grader_json(c.grader)},
          {"dataset", dataset_json(c.dataset)},     {"policy", policy_json(c.policy)},
          {"alignment", alignment_json(c.alignment)}, {"sft", sft_json(c.sft)},
          {"harness", harness_json(c.harness)}};
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  const json ref = to_json(c);
  reject_unknown(j, "config", ref);
  if (j.contains("trainer")) from_json_into(j.at("trainer"), c.trainer);
  if (j.contains("grader")) {
    const auto& g = j.at("grader");
    reject_unknown(g, "grader", ref.at("grader"));
    std::string kind = std::string(to_string(c.grader.kind));
    std::string fp = std::string(to_string(c.grader.fp_scope));
    std::string fn = std::string(to_string(c.grader.fn_scope));
    take(g, "grader", "kind", kind);
    take(g, "grader", "flip_prob_fp", c.grader.flip_prob_fp);
    take(g, "grader", "flip_prob_fn", c.grader.flip_prob_fn);
    take(g, "grader", "fp_scope", fp);
    take(g, "grader", "fn_scope", fn);
    try {
      c.grader.kind = grader_kind_from_string(kind);
      c.grader.fp_scope = rubric_scope_from_string(fp);
      c.grader.fn_scope = rubric_scope_from_string(fn);
    } catch (const InputError& e) {
      throw ConfigError(std::string("grader: ") + e.what());
    }
  }
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    reject_unknown(d, "dataset", ref.at("dataset"));
    auto& g = c.dataset.generate;
    std::string family = std::string(to_string(g.family));
    take(d, "dataset", "tasks_path", c.dataset.tasks_path);
    take(d, "dataset", "family", family);
    take(d, "dataset", "count", g.count);
    take(d, "dataset", "seed", g.seed);
    take(d, "dataset", "vocab_size", g.vocab_size);
    take(d, "dataset", "max_prompt_length", g.max_prompt_length);
    take(d, "dataset", "max_response_length", g.max_response_length);
    take(d, "dataset", "min_rubrics", g.min_rubrics);
    take(d, "dataset", "max_rubrics", g.max_rubrics);
    take(d, "dataset", "quality", g.quality);
    try {
      g.family = task_family_from_string(family);
    } catch (const InputError& e) {
      throw ConfigError(std::string("dataset: ") + e.what());
    }
  }
  if (j.contains("policy")) {
    const auto& p = j.at("policy");
    reject_unknown(p, "policy", ref.at("policy"));
    take(p, "policy", "vocab", c.policy.dims.vocab);
    take(p, "policy", "embed", c.policy.dims.embed);
    take(p, "policy", "hidden", c.policy.dims.hidden);
    take(p, "policy", "window", c.policy.dims.window);
    take(p, "policy", "interactions", c.policy.dims.interactions);
    take(p, "policy", "segmented", c.policy.dims.segmented);
    take(p, "policy", "init_scale", c.policy.init_scale);
    take(p, "policy", "init_checkpoint", c.policy.init_checkpoint);
  }
  if (j.contains("alignment")) {
    const auto& a = j.at("alignment");
    reject_unknown(a, "alignment", ref.at("alignment"));
    take(a, "alignment", "scoring_set_size", c.alignment.scoring_set_size);
    take(a, "alignment", "steps", c.alignment.steps);
    take(a, "alignment", "batch_size", c.alignment.batch_size);
    take(a, "alignment", "learning_rate", c.alignment.learning_rate);
    take(a, "alignment", "anchor_fraction", c.alignment.anchor_fraction);
    take(a, "alignment", "interleave_steps", c.alignment.interleave_steps);
    take(a, "alignment", "seed", c.alignment.seed);
  }
  if (j.contains("sft")) {
    const auto& s = j.at("sft");
    reject_unknown(s, "sft", ref.at("sft"));
    take(s, "sft", "steps", c.sft.steps);
    take(s, "sft", "batch_size", c.sft.batch_size);
    take(s, "sft", "learning_rate", c.sft.learning_rate);
  }
  if (j.contains("harness")) {
    const auto& h = j.at("harness");
    reject_unknown(h, "harness", ref.at("harness"));
    std::string backend = backend_name(c.harness.grading_backend);
    take(h, "harness", "workers", c.harness.workers);
    take(h, "harness", "checkpoint_every", c.harness.checkpoint_every);
    take(h, "harness", "metaeval_every", c.harness.metaeval_every);
    take(h, "harness", "metaeval_set_size", c.harness.metaeval_set_size);
    take(h, "harness", "grading_backend", backend);
    take(h, "harness", "injected_latency", c.harness.injected_latency);
    take(h, "harness", "log_verdicts", c.harness.log_verdicts);
    c.harness.grading_backend = backend_from_string(backend);
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return run_config_from_json(j);
}

std::vector<std::string> override_keys() {
  std::vector<std::string> out;
  const json ref = to_json(RunConfig{});
  for (const char* section : {"trainer", "grader", "dataset", "policy", "alignment", "sft", "harness"}) {
    for (const auto& [key, _] : ref.at(section).items()) out.push_back(std::string(section) + "." + key);
  }
  return out;
}

void apply_override(RunConfig& c, std::string_view key, std::string_view value) {
  const auto dot = key.find('.');
  if (dot == std::string_view::npos) throw ConfigError("override key must be section.key");
  const std::string section(key.substr(0, dot)), name(key.substr(dot + 1));
  json j = to_json(c);
  if (!j.contains(section) || !j.at(section).contains(name)) {
    throw ConfigError("unknown config key " + std::string(key));
  }
  json v = json::parse(value, nullptr, /*allow_exceptions=*/false);
  if (v.is_discarded()) v = std::string(value);
  // Strings that happen to parse as numbers stay strings where a string is expected.
  if (j[section][name].is_string() && !v.is_string()) v = std::string(value);
  j[section][name] = v;
  c = run_config_from_json(j);
}

std::string default_output_dir(std::string_view name) {
  const char* env = std::getenv(kOutputDirEnv);
  const fs::path base = (env && *env) ? fs::path(env) : fs::path("runs");
  return (base / std::string(name)).string();
}

TaskSet load_or_generate_tasks(const DatasetConfig& dataset) {
  if (!dataset.tasks_path.empty()) return load_tasks(dataset.tasks_path);
  return generate_tasks(dataset.generate);
}

PolicyParams initial_policy(const RunConfig& c) {
  if (!c.policy.init_checkpoint.empty()) {
    auto ck = load_checkpoint(c.policy.init_checkpoint);
    if (!(ck.params.dims() == c.policy.dims)) {
      throw ConfigError("init checkpoint dimensions differ from the policy section");
    }
    return std::move(ck.params);
  }
  return PolicyParams::random(c.policy.dims, c.trainer.seed, c.policy.init_scale);
}

void write_manifest(const std::string& out_dir, std::string_view command, const RunConfig& c) {
  ensure_dir(out_dir);
  JsonlWriter w((fs::path(out_dir) / "manifest.jsonl").string(), formats::kManifest);
  w.write({{"command", std::string(command)},
           {"version", version_string()},
           {"seed", c.trainer.seed},
           {"config", to_json(c)}});
}

RunConfig read_manifest_config(const std::string& path) {
  const auto recs = read_jsonl(path, formats::kManifest);
  if (recs.empty() || !recs.front().contains("config")) throw InputError(path + ": no config record");
  return run_config_from_json(recs.front().at("config"));
}

TrainArtifacts run_train(const RunConfig& c, const std::string& out_dir) {
  c.validate();
  const fs::path dir(out_dir);
  ensure_dir((dir / "checkpoints").string());
  write_manifest(out_dir, "train", c);

  const TaskSet tasks = load_or_generate_tasks(c.dataset);
  TaskLimits limits{c.policy.dims.vocab, c.trainer.max_prompt_length, c.trainer.max_response_length};
  for (const auto& t : tasks) {
    const auto problems = validate_task(t, limits);
    if (!problems.empty()) throw InputError("task " + t.id + ": " + problems.front());
  }
  save_tasks((dir / "tasks.jsonl").string(), tasks);

  PolicyParams init = initial_policy(c);
  GraderSpec grader = c.grader;
  grader.grading_temperature = c.trainer.grading_temperature;
  const bool self_kind = grader.kind == GraderKind::kSelf || grader.kind == GraderKind::kSnapshotSelf;

  // Grading alignment: warm-up from a scoring set, then interleaved with RL.
  std::vector<SftExample> alignment_set;
  if (self_kind && c.alignment.steps > 0 && c.alignment.scoring_set_size > 0) {
    AlignmentOptions ao = c.alignment;
    ao.seed = derive_seed({c.trainer.seed, c.alignment.seed, hash_id("alignment")});
    const auto scoring = generate_scoring_set(tasks, init, ao.scoring_set_size, ao.seed,
                                              c.trainer.max_response_length);
    save_scoring_set((dir / "scoring_set.jsonl").string(), scoring.examples);
    alignment_set = build_alignment_set(tasks, init, scoring, ao, c.trainer.max_response_length);
    auto [aligned, losses] = train_grading_alignment(init, alignment_set, ao);
    JsonlWriter lw((dir / "alignment.jsonl").string(), formats::kCurve);
    for (std::size_t i = 0; i < losses.size(); ++i) {
      lw.write({{"step", i}, {"metric", "alignment_loss"}, {"value", losses[i]}});
    }
    init = std::move(aligned);
  }

  TrainArtifacts art;
  art.out_dir = out_dir;

  // Held-out pairs for tracking the live judge.
  std::vector<ScoringExample> holdout;
  std::optional<JsonlWriter> meta_log;
  if (c.harness.metaeval_every > 0) {
    holdout = generate_scoring_set(tasks, init, c.harness.metaeval_set_size,
                                   derive_seed({c.trainer.seed, hash_id("metaeval-holdout")}),
                                   c.trainer.max_response_length)
                  .examples;
    meta_log.emplace((dir / "meta_eval.jsonl").string(), formats::kMetaEval);
  }
  auto meta_eval_at = [&](std::int64_t step, const PolicyParams& params) {
    Grader judge{{}, PolicySnapshot(params, step)};
    judge.spec.kind = GraderKind::kSnapshotSelf;
    auto r = meta_eval_grader(judge, holdout, c.trainer.grading_temperature,
                              derive_seed({c.trainer.seed, hash_id("metaeval")}), c.harness.workers);
    json rec = to_json(r);
    rec["step"] = step;
    meta_log->write(rec);
    art.meta_eval.emplace_back(step, r);
  };
  if (meta_log) meta_eval_at(0, init);

  JsonlWriter reports((dir / "reports.jsonl").string(), formats::kStepReports);
  std::optional<JsonlWriter> verdicts;
  if (c.harness.log_verdicts) verdicts.emplace((dir / "verdicts.jsonl").string(), formats::kVerdicts);

  TrainOptions opts;
  opts.grading.workers = c.harness.workers;
  opts.grading.backend = c.harness.grading_backend;
  opts.grading.injected_latency = c.harness.injected_latency;
  opts.checkpoint_every = c.harness.checkpoint_every;
  if (!alignment_set.empty() && c.alignment.interleave_steps > 0) {
    opts.alignment = {alignment_set, c.alignment.interleave_steps, c.alignment.batch_size,
                      c.alignment.learning_rate};
  }
  opts.on_step = [&](const StepReport& r) { reports.write(to_json(r)); };
  opts.on_checkpoint = [&](std::int64_t step, const PolicyParams& p) {
    save_checkpoint((dir / "checkpoints" / checkpoint_name(step)).string(), p, step);
  };
  if (verdicts) {
    opts.on_trace = [&](std::int64_t step, const StepTrace& trace) {
      for (const auto& v : verdict_records(step, trace)) verdicts->write(to_json(v));
    };
  }
  if (meta_log) {
    opts.after_step = [&](std::int64_t steps_done, const PolicyParams& p) {
      if (steps_done % c.harness.metaeval_every == 0) meta_eval_at(steps_done, p);
    };
  }

  art.result = train(init, tasks, c.trainer, grader, opts);
  const auto total = static_cast<std::int64_t>(art.result.reports.size());
  save_checkpoint((dir / "checkpoints" / checkpoint_name(total)).string(), art.result.params, total);
  save_checkpoint((dir / "final.bin").string(), art.result.params, total);
  return art;
}

SftArtifacts run_sft(const RunConfig& c, const std::string& out_dir) {
  c.validate();
  const fs::path dir(out_dir);
  ensure_dir((dir / "checkpoints").string());
  write_manifest(out_dir, "sft", c);
  const TaskSet tasks = load_or_generate_tasks(c.dataset);
  save_tasks((dir / "tasks.jsonl").string(), tasks);
  const auto examples = sft_examples(tasks, Vocabulary(c.policy.dims.vocab), c.trainer.max_response_length);
  if (examples.empty() && c.sft.steps > 0) throw InputError("no SFT examples");

  SftArtifacts art;
  art.out_dir = out_dir;
  art.params = initial_policy(c);
  save_checkpoint((dir / "checkpoints" / checkpoint_name(0)).string(), art.params, 0);
  JsonlWriter log((dir / "sft.jsonl").string(), formats::kCurve);
  Rng rng(derive_seed({c.trainer.seed, hash_id("sft-batches")}));
  std::vector<SftExample> batch;
  for (int step = 0; step < c.sft.steps; ++step) {
    batch.clear();
    const auto b = std::min<std::size_t>(c.sft.batch_size, examples.size());
    // Without replacement within a step.
    std::vector<std::size_t> idx(examples.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i = 0; i < b; ++i) batch.push_back(examples[idx[i]]);
    auto res = sft_step(art.params, batch, c.sft.learning_rate);
    art.params = std::move(res.params);
    art.losses.push_back(res.loss);
    log.write({{"step", step}, {"metric", "sft_loss"}, {"value", res.loss}});
    if (c.harness.checkpoint_every > 0 && (step + 1) % c.harness.checkpoint_every == 0) {
      save_checkpoint((dir / "checkpoints" / checkpoint_name(step + 1)).string(), art.params, step + 1);
    }
  }
  save_checkpoint((dir / "final.bin").string(), art.params, c.sft.steps);
  return art;
}

EvalResult evaluate_policy(const PolicyParams& params, std::span<const Task> tasks, int samples,
                           std::uint64_t seed, double temperature, int max_response_length,
                           int workers) {
  if (samples < 1) throw InputError("samples must be positive");
  if (tasks.empty()) throw InputError("no tasks to evaluate");
  EvalResult out;
  out.samples_per_task = samples;
  out.task_scores.assign(tasks.size(), 0.0);
  const std::size_t n = tasks.size() * static_cast<std::size_t>(samples);
  std::vector<double> scores(n);
  parallel_for(n, workers, [&](std::size_t k) {
    const std::size_t t = k / samples;
    const auto& task = tasks[t];
    const auto r = sample(params, task.prompt, temperature, max_response_length,
                          derive_seed({seed, hash_id("eval"), hash_id(task.id), k % samples}));
    std::vector<Verdict> vs;
    vs.reserve(task.rubrics.size());
    for (const auto& rb : task.rubrics) vs.push_back(grade_oracle(r, rb));
    scores[k] = reward_score(vs, task.rubrics);
  });
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    out.task_scores[k / samples] += scores[k] / samples;
    total += scores[k];
  }
  out.mean_score = total / static_cast<double>(n);
  return out;
}

std::vector<std::string> write_report_curves(const std::string& run_dir) {
  const fs::path dir(run_dir);
  const auto recs = read_jsonl((dir / "reports.jsonl").string(), formats::kStepReports);
  std::vector<StepReport> reports;
  for (const auto& j : recs) reports.push_back(step_report_from_json(j));

  std::vector<std::string> written;
  auto emit = [&](const std::string& metric, auto value_of) {
    const auto path = (dir / ("curve_" + metric + ".jsonl")).string();
    JsonlWriter w(path, formats::kCurve);
    for (const auto& r : reports) w.write({{"step", r.step}, {"metric", metric}, {"value", value_of(r)}});
    written.push_back(path);
  };
  emit("reward", [](const StepReport& r) { return r.mean_reward; });
  emit("oracle_reward", [](const StepReport& r) { return r.oracle_mean_reward; });
  emit("response_length", [](const StepReport& r) { return r.mean_response_length; });
  emit("clip_fraction", [](const StepReport& r) { return r.clip_fraction; });

  const auto meta_path = dir / "meta_eval.jsonl";
  if (fs::exists(meta_path)) {
    const auto path = (dir / "curve_mf1.jsonl").string();
    JsonlWriter w(path, formats::kCurve);
    for (const auto& j : read_jsonl(meta_path.string(), formats::kMetaEval)) {
      w.write({{"step", j.at("step")}, {"metric", "mf1"}, {"value", j.at("macro_f1")}});
    }
    written.push_back(path);
  }
  return written;
}

BackendComparison compare_grading_backends(const PolicyParams& params, std::span<const Task> batch,
                                           const TrainerConfig& config, const GraderSpec& grader,
                                           double injected_latency, int workers) {
  BackendComparison out;
  StepTrace trace;
  auto run = [&](GradingBackend backend) {
    TrainerState state(params);
    StepOptions opts;
    opts.grading.workers = workers;
    opts.grading.backend = backend;
    opts.grading.injected_latency = injected_latency;
    opts.trace = &trace;
    return train_step(state, batch, config, grader, opts);
  };
  out.colocated = run(GradingBackend::kColocated);
  out.remote = run(GradingBackend::kSimulatedRemote);
  for (const auto& g : trace.rollouts) out.grading_calls += g.verdicts.size();
  return out;
}

}  // namespace srrl
