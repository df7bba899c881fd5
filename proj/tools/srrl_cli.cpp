// srrl: command-line front end.
//
//   srrl gen-tasks --family contains --count 32 --seed 1 --out tasks.jsonl
//   srrl train --config run.json --trainer.epochs 200 --grader.kind self
//   srrl sft --config run.json
//   srrl eval --checkpoint runs/x/final.bin --tasks runs/x/tasks.jsonl
//   srrl meta-eval --checkpoint runs/x/final.bin --scoring-set runs/x/scoring_set.jsonl
//   srrl report --run runs/x
//   srrl bench-reward --latency 0.01
//
// Every config key is also a flag named section.key; flags win over the file.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "srrl/errors.hpp"
#include "srrl/harness.hpp"

using namespace srrl;

namespace {

struct RunFlags {
  std::string config_path;
  std::string manifest_path;
  std::string out_dir;
  std::map<std::string, std::optional<std::string>> overrides;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  auto* cfg = cmd->add_option("--config", f.config_path, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--manifest", f.manifest_path, "Replay the config recorded in a run manifest")
      ->check(CLI::ExistingFile)
      ->excludes(cfg);
  cmd->add_option("--out", f.out_dir, "Run directory (default: $SRRL_OUTPUT_DIR/<name> or runs/<name>)");
  for (const auto& key : override_keys()) {
    cmd->add_option("--" + key, f.overrides[key], "Overrides " + key)->group("Config overrides");
  }
}

RunConfig resolve(const RunFlags& f) {
  RunConfig c = !f.manifest_path.empty() ? read_manifest_config(f.manifest_path)
                : !f.config_path.empty() ? load_run_config(f.config_path)
                                         : RunConfig{};
  for (const auto& [key, value] : f.overrides) {
    if (value) apply_override(c, key, *value);
  }
  return c;
}

std::string run_dir(const RunFlags& f, const char* kind, const RunConfig& c) {
  if (!f.out_dir.empty()) return f.out_dir;
  return default_output_dir(std::string(kind) + "-seed" + std::to_string(c.trainer.seed));
}

std::vector<double> parse_temperatures(const std::vector<double>& given) {
  if (!given.empty()) return given;
  return {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-rewarding rubric-based RL on a toy token domain"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  // gen-tasks
  auto* gen = app.add_subcommand("gen-tasks", "Generate a task file");
  TaskGenOptions gen_opts;
  std::string gen_family = "contains", gen_out;
  gen->add_option("--family", gen_family, "contains | length | mixed | adversarial");
  gen->add_option("--count", gen_opts.count);
  gen->add_option("--seed", gen_opts.seed);
  gen->add_option("--vocab", gen_opts.vocab_size);
  gen->add_option("--max-prompt-length", gen_opts.max_prompt_length);
  gen->add_option("--max-response-length", gen_opts.max_response_length);
  gen->add_option("--min-rubrics", gen_opts.min_rubrics);
  gen->add_option("--max-rubrics", gen_opts.max_rubrics);
  gen->add_option("--quality", gen_opts.quality);
  gen->add_option("--out", gen_out, "Output file (default: stdout)");

  // train / sft
  RunFlags train_flags, sft_flags;
  auto* train_cmd = app.add_subcommand("train", "GRPO training with the configured grader");
  add_run_flags(train_cmd, train_flags);
  auto* sft_cmd = app.add_subcommand("sft", "Cross-entropy training on ideal completions");
  add_run_flags(sft_cmd, sft_flags);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Oracle-score a checkpoint on a task file");
  std::string eval_ckpt, eval_tasks, eval_out;
  int eval_samples = 8, eval_workers = 1, eval_max_len = 8;
  std::uint64_t eval_seed = 0;
  double eval_temp = 1.0;
  eval_cmd->add_option("--checkpoint", eval_ckpt)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--tasks", eval_tasks)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--samples", eval_samples, "Rollouts per task");
  eval_cmd->add_option("--seed", eval_seed);
  eval_cmd->add_option("--temperature", eval_temp);
  eval_cmd->add_option("--max-response-length", eval_max_len);
  eval_cmd->add_option("--workers", eval_workers);
  eval_cmd->add_option("--out", eval_out, "Result file (JSONL)");

  // meta-eval
  auto* meta_cmd = app.add_subcommand("meta-eval", "Macro F1 of a grader against oracle labels");
  std::string meta_ckpt, meta_set, meta_tasks, meta_out, meta_grader = "snapshot-self";
  int meta_count = 1000, meta_workers = 1, meta_max_len = 8;
  std::uint64_t meta_seed = 0;
  std::vector<double> meta_temps;
  double meta_fp = 0.0, meta_fn = 0.0;
  meta_cmd->add_option("--checkpoint", meta_ckpt, "Judge / reference policy")->check(CLI::ExistingFile);
  meta_cmd->add_option("--scoring-set", meta_set, "Labelled pairs (JSONL)")->check(CLI::ExistingFile);
  meta_cmd->add_option("--tasks", meta_tasks, "Generate pairs from these tasks instead")
      ->check(CLI::ExistingFile);
  meta_cmd->add_option("--count", meta_count, "Pairs to generate with --tasks");
  meta_cmd->add_option("--max-response-length", meta_max_len);
  meta_cmd->add_option("--grader", meta_grader, "snapshot-self | oracle | noisy");
  meta_cmd->add_option("--flip-fp", meta_fp);
  meta_cmd->add_option("--flip-fn", meta_fn);
  meta_cmd->add_option("--temperatures", meta_temps, "Sweep (default 0 0.2 ... 1.0)");
  meta_cmd->add_option("--seed", meta_seed);
  meta_cmd->add_option("--workers", meta_workers);
  meta_cmd->add_option("--out", meta_out, "Result file (JSONL)");

  // report
  auto* report_cmd = app.add_subcommand("report", "Write curve files from a run directory");
  std::string report_dir;
  report_cmd->add_option("--run", report_dir)->required()->check(CLI::ExistingDirectory);

  // bench-reward
  auto* bench_cmd = app.add_subcommand("bench-reward", "Colocated vs simulated-remote grading time");
  RunFlags bench_flags;
  double bench_latency = 0.01;
  add_run_flags(bench_cmd, bench_flags);
  bench_cmd->add_option("--latency", bench_latency, "Injected seconds per remote grading call");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      gen_opts.family = task_family_from_string(gen_family);
      const auto tasks = generate_tasks(gen_opts);
      if (gen_out.empty()) {
        write_tasks(std::cout, tasks);
      } else {
        save_tasks(gen_out, tasks);
        std::fprintf(stderr, "wrote %zu tasks to %s\n", tasks.size(), gen_out.c_str());
      }
    } else if (train_cmd->parsed()) {
      const auto c = resolve(train_flags);
      const auto dir = run_dir(train_flags, "train", c);
      const auto art = run_train(c, dir);
      if (!art.result.reports.empty()) {
        const auto& first = art.result.reports.front();
        const auto& last = art.result.reports.back();
        std::printf("steps %zu  oracle reward %.4f -> %.4f  grader reward %.4f -> %.4f\n",
                    art.result.reports.size(), first.oracle_mean_reward, last.oracle_mean_reward,
                    first.mean_reward, last.mean_reward);
      }
      std::printf("run directory: %s\n", dir.c_str());
    } else if (sft_cmd->parsed()) {
      const auto c = resolve(sft_flags);
      const auto dir = run_dir(sft_flags, "sft", c);
      const auto art = run_sft(c, dir);
      if (!art.losses.empty()) {
        std::printf("steps %zu  loss %.4f -> %.4f\n", art.losses.size(), art.losses.front(),
                    art.losses.back());
      }
      std::printf("run directory: %s\n", dir.c_str());
    } else if (eval_cmd->parsed()) {
      const auto ck = load_checkpoint(eval_ckpt);
      const auto tasks = load_tasks(eval_tasks);
      const auto r = evaluate_policy(ck.params, tasks, eval_samples, eval_seed, eval_temp,
                                     eval_max_len, eval_workers);
      std::printf("mean oracle score %.6f over %zu tasks x %d samples\n", r.mean_score,
                  tasks.size(), eval_samples);
      if (!eval_out.empty()) {
        JsonlWriter w(eval_out, formats::kEval);
        w.write({{"checkpoint", eval_ckpt},
                 {"step", ck.step},
                 {"tasks", eval_tasks},
                 {"samples", eval_samples},
                 {"seed", eval_seed},
                 {"temperature", eval_temp},
                 {"mean_score", r.mean_score},
                 {"task_scores", r.task_scores}});
      }
    } else if (meta_cmd->parsed()) {
      std::vector<ScoringExample> pairs;
      std::optional<Checkpoint> ck;
      if (!meta_ckpt.empty()) ck = load_checkpoint(meta_ckpt);
      if (!meta_set.empty()) {
        pairs = load_scoring_set(meta_set);
      } else if (!meta_tasks.empty()) {
        if (!ck) throw ConfigError("--tasks needs --checkpoint to sample responses from");
        pairs = generate_scoring_set(load_tasks(meta_tasks), ck->params, meta_count, meta_seed,
                                     meta_max_len)
                    .examples;
      } else {
        throw ConfigError("give --scoring-set or --tasks");
      }
      Grader g;
      g.spec.kind = grader_kind_from_string(meta_grader);
      g.spec.flip_prob_fp = meta_fp;
      g.spec.flip_prob_fn = meta_fn;
      std::vector<MetaEvalResult> results;
      if (g.spec.kind == GraderKind::kSelf || g.spec.kind == GraderKind::kSnapshotSelf) {
        if (!ck) throw ConfigError("self graders need --checkpoint");
        const auto temps = parse_temperatures(meta_temps);
        results = temperature_sweep(PolicySnapshot(ck->params, ck->step), pairs, temps, meta_seed,
                                    meta_workers);
      } else {
        results.push_back(meta_eval_grader(g, pairs, 0.0, meta_seed, meta_workers));
      }
      std::optional<JsonlWriter> w;
      if (!meta_out.empty()) w.emplace(meta_out, formats::kMetaEval);
      for (const auto& r : results) {
        std::printf("%-14s T=%.2f  macro F1 %.4f  (met %.4f, unmet %.4f, n=%zu)\n",
                    std::string(to_string(r.grader_kind)).c_str(), r.grading_temperature,
                    r.macro_f1, r.met.f1, r.unmet.f1, r.n_judgments);
        if (w) w->write(to_json(r));
      }
    } else if (report_cmd->parsed()) {
      for (const auto& path : write_report_curves(report_dir)) std::printf("%s\n", path.c_str());
    } else if (bench_cmd->parsed()) {
      auto c = resolve(bench_flags);
      const auto tasks = load_or_generate_tasks(c.dataset);
      const auto params = initial_policy(c);
      GraderSpec grader = c.grader;
      const auto n = std::min<std::size_t>(tasks.size(), c.trainer.batch_size);
      const auto cmp = compare_grading_backends(params, std::span(tasks).first(n), c.trainer, grader,
                                                bench_latency, c.harness.workers);
      auto line = [](const char* name, const StepReport& r) {
        std::printf("%-17s reward_time %.4fs  step_time %.4fs  share %.3f\n", name, r.reward_time,
                    r.step_time, r.reward_time / r.step_time);
      };
      line("colocated", cmp.colocated);
      line("simulated-remote", cmp.remote);
      std::printf("grading calls %zu, serial latency bound %.4fs\n", cmp.grading_calls,
                  cmp.grading_calls * bench_latency / c.harness.workers);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const InputError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 3;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 4;
  }
  return 0;
}
