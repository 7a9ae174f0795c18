#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "imitree/losses.hpp"

namespace imitree {

/// One logged point. Loss columns average the train steps since the previous
/// record; evaluation columns are present only when an evaluation ran.
struct MetricRecord {
  std::int64_t env_steps = 0;
  std::int64_t train_steps = 0;
  LossBreakdown loss;
  double mean_ail_reward = 0.0;
  std::optional<double> eval_return;
  std::optional<double> eval_score;
};

/// Append-only metric log.
class Metrics {
 public:
  static constexpr const char* kCsvHeader =
      "env_steps,train_steps,loss_total,loss_policy,loss_value,loss_consistency,loss_disc,loss_gp,loss_bc,"
      "mean_ail_reward,eval_return,eval_score";

  void append(MetricRecord r);
  const std::vector<MetricRecord>& records() const { return records_; }
  bool empty() const { return records_.empty(); }

  /// Last evaluation, if any.
  std::optional<MetricRecord> last_eval() const;
  /// First env-step count at which the normalized score reached `threshold`.
  std::optional<std::int64_t> steps_to_score(double threshold) const;

  std::string to_csv() const;
  static Metrics from_csv(const std::string& text);

 private:
  std::vector<MetricRecord> records_;
};

struct RunSummary {
  std::string env;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds;
  std::int64_t env_steps = 0;
  std::int64_t train_steps = 0;
  std::optional<double> final_return;
  std::optional<double> final_score;
  std::optional<std::int64_t> steps_to_half;
  double j_expert = 0.0;
  double j_random = 0.0;
  std::string config_text;
  std::string git_describe;
};

/// Writes metrics.csv and summary.json into `dir`. Wall-clock time goes to a
/// separate timing.json so the other two files are reproducible byte for byte.
void write_run_outputs(const std::filesystem::path& dir, const Metrics& metrics, const RunSummary& summary,
                       double wall_seconds);

std::string summary_json(const RunSummary& s);

/// `git describe` of the build.
const char* git_describe();

}  // namespace imitree
