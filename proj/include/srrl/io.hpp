#ifndef SRRL_IO_HPP_
#define SRRL_IO_HPP_

// Line-delimited JSON files. Every file starts with a header record
//   {"format": "srrl.<kind>", "version": 1}
// followed by one record per line. Readers reject unknown formats and newer
// versions.

#include <cstdint>
#include <fstream>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"  // vendored nlohmann::json

#include "srrl/core.hpp"
#include "srrl/grpo.hpp"
#include "srrl/metaeval.hpp"

namespace srrl {

using json = nlohmann::json;

inline constexpr int kFileFormatVersion = 1;

namespace formats {
inline constexpr std::string_view kTasks = "srrl.tasks";
inline constexpr std::string_view kVerdicts = "srrl.verdicts";
inline constexpr std::string_view kStepReports = "srrl.step-reports";
inline constexpr std::string_view kMetaEval = "srrl.meta-eval";
inline constexpr std::string_view kScoringSet = "srrl.scoring-set";
inline constexpr std::string_view kCurve = "srrl.curve";
inline constexpr std::string_view kManifest = "srrl.manifest";
inline constexpr std::string_view kEval = "srrl.eval";
}  // namespace formats

json file_header(std::string_view format);

class JsonlWriter {
 public:
  JsonlWriter(const std::string& path, std::string_view format);
  void write(const json& record);
  void flush() { out_.flush(); }

 private:
  std::string path_;
  std::ofstream out_;
};

// Records after the header; throws InputError on a missing or mismatched
// header and on malformed lines (the message names the line).
std::vector<json> read_jsonl(std::istream& in, std::string_view format);
std::vector<json> read_jsonl(const std::string& path, std::string_view format);

// Tasks: {"id", "prompt": [int], "rubrics": [{"id", "points",
// "criterion": {"kind", "arg"}, "axis"}], "ideal_completion"?: [int],
// "solvable"?: bool}. `arg` is an int, or an int array for prefix-is.
json to_json(const Task& task);
Task task_from_json(const json& j);
void write_tasks(std::ostream& out, std::span<const Task> tasks);
TaskSet read_tasks(std::istream& in);
void save_tasks(const std::string& path, std::span<const Task> tasks);
TaskSet load_tasks(const std::string& path);

// Verdict log: {"step", "task_id", "group_index", "rubric_id", "met",
// "grader_kind", "elapsed_time"}.
struct VerdictRecord {
  std::int64_t step = 0;
  std::string task_id;
  int group_index = 0;
  std::string rubric_id;
  bool met = false;
  GraderKind grader_kind = GraderKind::kOracle;
  double elapsed_time = 0.0;
};
json to_json(const VerdictRecord& v);
VerdictRecord verdict_from_json(const json& j);

json to_json(const StepReport& r);
StepReport step_report_from_json(const json& j);

json to_json(const MetaEvalResult& r);
MetaEvalResult meta_eval_from_json(const json& j);

// Scoring sets: verdict-log fields (the oracle's verdict, step 0, elapsed 0)
// plus "oracle_label" and the data needed to rebuild the example: "prompt",
// "response", "ended", "rubric".
json to_json(const ScoringExample& ex);
ScoringExample scoring_example_from_json(const json& j);
void save_scoring_set(const std::string& path, std::span<const ScoringExample> examples);
std::vector<ScoringExample> load_scoring_set(const std::string& path);

json to_json(const TrainerConfig& c);
void from_json_into(const json& j, TrainerConfig& c);

}  // namespace srrl

#endif  // SRRL_IO_HPP_
