#include "srrl/io.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>

#include "srrl/errors.hpp"

namespace srrl {

namespace {

template <typename T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw InputError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError(std::string("field '") + key + "' has the wrong type");
  }
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError(std::string("field '") + key + "' has the wrong type");
  }
}

// JSON has no infinity; clip bounds may be infinite.
json real_or_inf(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

double real_from(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw InputError(std::string("field '") + key + "' is not a number");
  }
  if (!v.is_number()) throw InputError(std::string("field '") + key + "' is not a number");
  return v.get<double>();
}

json criterion_to_json(const Criterion& c) {
  json arg = c.kind == CriterionKind::kPrefixIs ? json(c.prefix) : json(c.value);
  return {{"kind", std::string(to_string(c.kind))}, {"arg", arg}};
}

Criterion criterion_from_json(const json& j) {
  Criterion c;
  c.kind = criterion_kind_from_string(field<std::string>(j, "kind"));
  if (c.kind == CriterionKind::kPrefixIs) {
    c.prefix = field<TokenSeq>(j, "arg");
  } else {
    c.value = field<int>(j, "arg");
  }
  return c;
}

json rubric_to_json(const Rubric& r) {
  return {{"id", r.id}, {"points", r.points}, {"criterion", criterion_to_json(r.criterion)},
          {"axis", r.axis}};
}

Rubric rubric_from_json(const json& j) {
  Rubric r;
  r.id = field<std::string>(j, "id");
  r.points = field<int>(j, "points");
  if (!j.contains("criterion")) throw InputError("missing field 'criterion'");
  r.criterion = criterion_from_json(j.at("criterion"));
  maybe(j, "axis", r.axis);
  return r;
}

}  // namespace

json file_header(std::string_view format) {
  return {{"format", std::string(format)}, {"version", kFileFormatVersion}};
}

JsonlWriter::JsonlWriter(const std::string& path, std::string_view format)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw InputError("cannot open " + path + " for writing");
  write(file_header(format));
}

void JsonlWriter::write(const json& record) {
  out_ << record.dump() << '\n';
  if (!out_) throw InputError("write failed: " + path_);
}

std::vector<json> read_jsonl(std::istream& in, std::string_view format) {
  std::vector<json> out;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InputError("line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!have_header) {
      if (!j.is_object() || j.value("format", std::string()) != format) {
        throw InputError("line " + std::to_string(lineno) + ": expected a '" + std::string(format) +
                         "' header");
      }
      if (j.value("version", 0) < 1 || j.value("version", 0) > kFileFormatVersion) {
        throw InputError("unsupported " + std::string(format) + " version");
      }
      have_header = true;
      continue;
    }
    out.push_back(std::move(j));
  }
  if (!have_header) throw InputError("empty file: expected a '" + std::string(format) + "' header");
  return out;
}

std::vector<json> read_jsonl(const std::string& path, std::string_view format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  try {
    return read_jsonl(in, format);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

json to_json(const Task& t) {
  json rubrics = json::array();
  for (const auto& r : t.rubrics) rubrics.push_back(rubric_to_json(r));
  json j = {{"id", t.id}, {"prompt", t.prompt}, {"rubrics", rubrics}};
  if (t.ideal_completion) j["ideal_completion"] = *t.ideal_completion;
  if (!t.solvable) j["solvable"] = false;
  return j;
}

Task task_from_json(const json& j) {
  Task t;
  t.id = field<std::string>(j, "id");
  t.prompt = field<TokenSeq>(j, "prompt");
  if (!j.contains("rubrics") || !j.at("rubrics").is_array()) {
    throw InputError("task " + t.id + ": 'rubrics' must be an array");
  }
  for (const auto& r : j.at("rubrics")) {
    try {
      t.rubrics.push_back(rubric_from_json(r));
    } catch (const InputError& e) {
      throw InputError("task " + t.id + ": " + e.what());
    }
  }
  if (j.contains("ideal_completion") && !j.at("ideal_completion").is_null()) {
    t.ideal_completion = field<TokenSeq>(j, "ideal_completion");
  }
  maybe(j, "solvable", t.solvable);
  return t;
}

void write_tasks(std::ostream& out, std::span<const Task> tasks) {
  out << file_header(formats::kTasks).dump() << '\n';
  for (const auto& t : tasks) out << to_json(t).dump() << '\n';
}

TaskSet read_tasks(std::istream& in) {
  TaskSet out;
  for (const auto& j : read_jsonl(in, formats::kTasks)) out.push_back(task_from_json(j));
  return out;
}

void save_tasks(const std::string& path, std::span<const Task> tasks) {
  JsonlWriter w(path, formats::kTasks);
  for (const auto& t : tasks) w.write(to_json(t));
}

TaskSet load_tasks(const std::string& path) {
  TaskSet out;
  std::size_t n = 0;
  for (const auto& j : read_jsonl(path, formats::kTasks)) {
    ++n;
    try {
      out.push_back(task_from_json(j));
    } catch (const InputError& e) {
      throw InputError(path + ": record " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

json to_json(const VerdictRecord& v) {
  return {{"step", v.step},
          {"task_id", v.task_id},
          {"group_index", v.group_index},
          {"rubric_id", v.rubric_id},
          {"met", v.met},
          {"grader_kind", std::string(to_string(v.grader_kind))},
          {"elapsed_time", v.elapsed_time}};
}

VerdictRecord verdict_from_json(const json& j) {
  VerdictRecord v;
  v.step = field<std::int64_t>(j, "step");
  v.task_id = field<std::string>(j, "task_id");
  v.group_index = field<int>(j, "group_index");
  v.rubric_id = field<std::string>(j, "rubric_id");
  v.met = field<bool>(j, "met");
  v.grader_kind = grader_kind_from_string(field<std::string>(j, "grader_kind"));
  v.elapsed_time = field<double>(j, "elapsed_time");
  return v;
}

json to_json(const StepReport& r) {
  return {{"step", r.step},
          {"mean_reward", r.mean_reward},
          {"oracle_mean_reward", r.oracle_mean_reward},
          {"mean_response_length", r.mean_response_length},
          {"objective", r.objective},
          {"clip_fraction", r.clip_fraction},
          {"degenerate_groups", r.degenerate_groups},
          {"resampled_groups", r.resampled_groups},
          {"alignment_loss", r.alignment_loss},
          {"step_time", r.step_time},
          {"reward_time", r.reward_time},
          {"injected_latency", r.injected_latency}};
}

StepReport step_report_from_json(const json& j) {
  StepReport r;
  r.step = field<std::int64_t>(j, "step");
  r.mean_reward = field<double>(j, "mean_reward");
  r.oracle_mean_reward = field<double>(j, "oracle_mean_reward");
  r.mean_response_length = field<double>(j, "mean_response_length");
  r.objective = field<double>(j, "objective");
  r.clip_fraction = field<double>(j, "clip_fraction");
  r.degenerate_groups = field<int>(j, "degenerate_groups");
  maybe(j, "resampled_groups", r.resampled_groups);
  maybe(j, "alignment_loss", r.alignment_loss);
  r.step_time = field<double>(j, "step_time");
  r.reward_time = field<double>(j, "reward_time");
  maybe(j, "injected_latency", r.injected_latency);
  return r;
}

json to_json(const MetaEvalResult& r) {
  auto cls = [](const ClassStats& c) {
    return json{{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}};
  };
  return {{"macro_f1", r.macro_f1},
          {"met", cls(r.met)},
          {"unmet", cls(r.unmet)},
          {"n_judgments", r.n_judgments},
          {"grader_kind", std::string(to_string(r.grader_kind))},
          {"grading_temperature", r.grading_temperature},
          {"single_class", r.single_class}};
}

MetaEvalResult meta_eval_from_json(const json& j) {
  auto cls = [](const json& c) {
    return ClassStats{field<double>(c, "precision"), field<double>(c, "recall"),
                      field<double>(c, "f1")};
  };
  MetaEvalResult r;
  r.macro_f1 = field<double>(j, "macro_f1");
  r.met = cls(j.at("met"));
  r.unmet = cls(j.at("unmet"));
  r.n_judgments = field<std::size_t>(j, "n_judgments");
  r.grader_kind = grader_kind_from_string(field<std::string>(j, "grader_kind"));
  r.grading_temperature = field<double>(j, "grading_temperature");
  maybe(j, "single_class", r.single_class);
  return r;
}

json to_json(const ScoringExample& ex) {
  VerdictRecord v;
  v.task_id = ex.task_id;
  v.group_index = ex.rollout.group_index;
  v.rubric_id = ex.rubric.id;
  v.met = ex.oracle_label;
  json j = to_json(v);
  j["oracle_label"] = ex.oracle_label;
  j["prompt"] = ex.prompt;
  j["response"] = ex.rollout.tokens;
  j["ended"] = ex.rollout.ended;
  j["rubric"] = rubric_to_json(ex.rubric);
  return j;
}

ScoringExample scoring_example_from_json(const json& j) {
  const auto v = verdict_from_json(j);
  ScoringExample ex;
  ex.task_id = v.task_id;
  ex.prompt = field<TokenSeq>(j, "prompt");
  ex.rollout.task_id = v.task_id;
  ex.rollout.group_index = v.group_index;
  ex.rollout.tokens = field<TokenSeq>(j, "response");
  ex.rollout.ended = field<bool>(j, "ended");
  if (ex.rollout.ended && ex.rollout.tokens.empty()) {
    throw InputError("an ended response needs its end token");
  }
  if (!j.contains("rubric")) throw InputError("missing field 'rubric'");
  ex.rubric = rubric_from_json(j.at("rubric"));
  ex.oracle_label = field<bool>(j, "oracle_label");
  return ex;
}

void save_scoring_set(const std::string& path, std::span<const ScoringExample> examples) {
  JsonlWriter w(path, formats::kScoringSet);
  for (const auto& ex : examples) w.write(to_json(ex));
}

std::vector<ScoringExample> load_scoring_set(const std::string& path) {
  std::vector<ScoringExample> out;
  for (const auto& j : read_jsonl(path, formats::kScoringSet)) {
    out.push_back(scoring_example_from_json(j));
  }
  return out;
}

json to_json(const TrainerConfig& c) {
  return {{"group_size", c.group_size},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"steps_per_epoch", c.steps_per_epoch},
          {"inner_iterations", c.inner_iterations},
          {"clip_low", real_or_inf(c.clip_low)},
          {"clip_high", real_or_inf(c.clip_high)},
          {"rollout_temperature", c.rollout_temperature},
          {"grading_temperature", c.grading_temperature},
          {"max_prompt_length", c.max_prompt_length},
          {"max_response_length", c.max_response_length},
          {"learning_rate", c.learning_rate},
          {"momentum", c.momentum},
          {"dynamic_sampling", c.dynamic_sampling},
          {"dynamic_sampling_rounds", c.dynamic_sampling_rounds},
          {"seed", c.seed}};
}

void from_json_into(const json& j, TrainerConfig& c) {
  if (!j.is_object()) throw ConfigError("trainer section must be an object");
  static const char* known[] = {"group_size", "batch_size", "epochs", "steps_per_epoch",
                                "inner_iterations", "clip_low", "clip_high",
                                "rollout_temperature", "grading_temperature",
                                "max_prompt_length", "max_response_length", "learning_rate",
                                "momentum", "dynamic_sampling", "dynamic_sampling_rounds", "seed"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      throw ConfigError("unknown trainer key '" + key + "'");
    }
  }
  try {
    maybe(j, "group_size", c.group_size);
    maybe(j, "batch_size", c.batch_size);
    maybe(j, "epochs", c.epochs);
    maybe(j, "steps_per_epoch", c.steps_per_epoch);
    maybe(j, "inner_iterations", c.inner_iterations);
    if (j.contains("clip_low")) c.clip_low = real_from(j, "clip_low");
    if (j.contains("clip_high")) c.clip_high = real_from(j, "clip_high");
    maybe(j, "rollout_temperature", c.rollout_temperature);
    maybe(j, "grading_temperature", c.grading_temperature);
    maybe(j, "max_prompt_length", c.max_prompt_length);
    maybe(j, "max_response_length", c.max_response_length);
    maybe(j, "learning_rate", c.learning_rate);
    maybe(j, "momentum", c.momentum);
    maybe(j, "dynamic_sampling", c.dynamic_sampling);
    maybe(j, "dynamic_sampling_rounds", c.dynamic_sampling_rounds);
    maybe(j, "seed", c.seed);
  } catch (const InputError& e) {
    throw ConfigError(std::string("trainer: ") + e.what());
  }
}

}  // namespace srrl
