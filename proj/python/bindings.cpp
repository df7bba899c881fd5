// Python bindings. Structured values (tasks, configs, reports) cross as JSON
// text in the same shapes as the on-disk records; srrl/__init__.py decodes them.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "srrl/errors.hpp"
#include "srrl/harness.hpp"

namespace py = pybind11;
using namespace srrl;

namespace {

TaskSet tasks_from_text(const std::string& text) {
  TaskSet out;
  for (const auto& j : json::parse(text)) out.push_back(task_from_json(j));
  return out;
}

std::string tasks_to_text(std::span<const Task> tasks) {
  json arr = json::array();
  for (const auto& t : tasks) arr.push_back(to_json(t));
  return arr.dump();
}

py::dict rollout_dict(const Rollout& r) {
  py::dict d;
  d["tokens"] = r.tokens;
  d["old_logprobs"] = r.old_logprobs;
  d["ended"] = r.ended;
  return d;
}

Rollout make_rollout(const TokenSeq& tokens, const Vocabulary& v) {
  Rollout r;
  r.tokens = tokens;
  r.ended = !tokens.empty() && tokens.back() == v.end();
  return r;
}

PolicyDims dims_from(int vocab, int embed, int hidden, int window) {
  PolicyDims d;
  d.vocab = vocab;
  d.embed = embed;
  d.hidden = hidden;
  d.window = window;
  return d;
}

}  // namespace

PYBIND11_MODULE(_srrl, m) {
  m.doc() = "Self-rewarding rubric-based RL core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("version", &version_string);

  m.def("vocabulary", [](int size) {
    const Vocabulary v(size);
    py::dict d;
    d["size"] = v.size();
    d["content_size"] = v.content_size();
    d["end"] = v.end();
    d["judge"] = v.judge();
    d["sep"] = v.sep();
    d["met"] = v.met();
    d["unmet"] = v.unmet();
    return d;
  }, py::arg("size") = 32);

  py::class_<PolicyParams>(m, "Policy")
      .def(py::init([](int vocab, int embed, int hidden, int window) {
             return PolicyParams(dims_from(vocab, embed, hidden, window));
           }),
           py::arg("vocab") = 32, py::arg("embed") = 16, py::arg("hidden") = 32, py::arg("window") = 4)
      .def_static("random", [](std::uint64_t seed, double scale, int vocab, int embed, int hidden, int window) {
             return PolicyParams::random(dims_from(vocab, embed, hidden, window), seed, scale);
           },
           py::arg("seed"), py::arg("scale") = 0.1, py::arg("vocab") = 32, py::arg("embed") = 16,
           py::arg("hidden") = 32, py::arg("window") = 4)
      .def_static("load", [](const std::string& path) {
        auto ck = load_checkpoint(path);
        return py::make_tuple(std::move(ck.params), ck.step);
      })
      .def("save", [](const PolicyParams& p, const std::string& path, std::int64_t step) {
        save_checkpoint(path, p, step);
      }, py::arg("path"), py::arg("step") = 0)
      .def_property_readonly("vocab", [](const PolicyParams& p) { return p.dims().vocab; })
      .def_property_readonly("param_count", [](const PolicyParams& p) { return p.data().size(); })
      .def_property("data",
          [](const PolicyParams& p) { return std::vector<double>(p.data().begin(), p.data().end()); },
          [](PolicyParams& p, const std::vector<double>& v) {
            if (v.size() != p.data().size()) throw InputError("parameter count mismatch");
            std::copy(v.begin(), v.end(), p.data().begin());
          })
      .def("logprob", [](const PolicyParams& p, const TokenSeq& prompt, const TokenSeq& response) {
        return logprob(p, prompt, response);
      })
      .def("grad_logprob", [](const PolicyParams& p, const TokenSeq& prompt, const TokenSeq& response) {
        const auto g = grad_logprob(p, prompt, response);
        return std::vector<double>(g.data().begin(), g.data().end());
      })
      .def("next_token_logits", [](const PolicyParams& p, const TokenSeq& prompt, const TokenSeq& prefix) {
        return next_token_logits(p, prompt, prefix);
      }, py::arg("prompt"), py::arg("prefix") = TokenSeq{})
      .def("sample", [](const PolicyParams& p, const TokenSeq& prompt, double temperature, int max_len,
                        std::uint64_t seed) { return rollout_dict(sample(p, prompt, temperature, max_len, seed)); },
           py::arg("prompt"), py::arg("temperature") = 1.0, py::arg("max_len") = 8, py::arg("seed") = 0)
      .def("__eq__", [](const PolicyParams& a, const PolicyParams& b) { return a == b; });

  m.def("group_advantages", [](const std::vector<double>& scores) {
    const auto g = group_advantages(scores);
    return py::make_tuple(g.advantages, g.degenerate);
  });

  m.def("_reward_score", [](const std::string& task_text, const std::vector<bool>& met) {
    const auto task = task_from_json(json::parse(task_text));
    if (met.size() != task.rubrics.size()) throw InputError("one met flag per rubric expected");
    std::vector<Verdict> verdicts;
    for (std::size_t i = 0; i < met.size(); ++i) verdicts.push_back({task.rubrics[i].id, met[i], GraderKind::kOracle, 0.0});
    return reward_score(verdicts, task.rubrics);
  });

  m.def("_grade_oracle", [](const std::string& task_text, const TokenSeq& response) {
    const auto task = task_from_json(json::parse(task_text));
    const auto r = make_rollout(response, Vocabulary());
    std::vector<bool> met;
    for (const auto& rubric : task.rubrics) met.push_back(grade_oracle(r, rubric).met);
    return met;
  });

  m.def("_macro_f1", [](const std::vector<bool>& predictions, const std::vector<bool>& labels) {
    return to_json(macro_f1(predictions, labels)).dump();
  });

  // samples: (prompt, tokens, old_logprobs, advantage) tuples.
  m.def("grpo_objective",
        [](const PolicyParams& live,
           const std::vector<std::tuple<TokenSeq, TokenSeq, std::vector<double>, double>>& samples,
           double clip_low, double clip_high) {
          std::vector<SurrogateSample> ss;
          for (const auto& [prompt, tokens, old, adv] : samples) {
            SurrogateSample s;
            s.prompt = prompt;
            s.rollout = make_rollout(tokens, live.vocabulary());
            s.rollout.old_logprobs = old;
            s.advantage = adv;
            ss.push_back(std::move(s));
          }
          const auto r = grpo_objective(live, ss, ClipRange{clip_low, clip_high});
          return py::make_tuple(r.value, std::vector<double>(r.gradient.data().begin(), r.gradient.data().end()),
                                r.clip_fraction);
        },
        py::arg("live"), py::arg("samples"), py::arg("clip_low") = 0.2, py::arg("clip_high") = 0.28);

  m.def("_generate_tasks", [](const std::string& family, int count, std::uint64_t seed) {
    TaskGenOptions o;
    o.family = task_family_from_string(family);
    o.count = count;
    o.seed = seed;
    return tasks_to_text(generate_tasks(o));
  });
  m.def("_load_tasks", [](const std::string& path) { return tasks_to_text(load_tasks(path)); });
  m.def("_save_tasks", [](const std::string& path, const std::string& text) {
    save_tasks(path, tasks_from_text(text));
  });

  m.def("_default_config", [] { return to_json(RunConfig{}).dump(); });
  m.def("config_keys", &override_keys);
  m.def("default_output_dir", [](const std::string& name) { return default_output_dir(name); });

  m.def("_evaluate", [](const PolicyParams& p, const std::string& tasks_text, int samples, std::uint64_t seed,
                        double temperature, int max_len) {
    const auto tasks = tasks_from_text(tasks_text);
    EvalResult r;
    {
      py::gil_scoped_release release;
      r = evaluate_policy(p, tasks, samples, seed, temperature, max_len);
    }
    return py::make_tuple(r.mean_score, r.task_scores);
  });

  m.def("_run_train", [](const std::string& config_text, const std::string& out_dir) {
    auto c = run_config_from_json(json::parse(config_text));
    c.validate();
    TrainArtifacts art;
    {
      py::gil_scoped_release release;
      art = run_train(c, out_dir);
    }
    json reports = json::array();
    for (const auto& r : art.result.reports) reports.push_back(to_json(r));
    return py::make_tuple(std::move(art.result.params), reports.dump());
  });

  m.def("_run_sft", [](const std::string& config_text, const std::string& out_dir) {
    auto c = run_config_from_json(json::parse(config_text));
    c.validate();
    SftArtifacts art;
    {
      py::gil_scoped_release release;
      art = run_sft(c, out_dir);
    }
    return py::make_tuple(std::move(art.params), art.losses);
  });

  m.def("write_report_curves", &write_report_curves);
}
