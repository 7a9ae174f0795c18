#include "imitree/metrics.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "imitree/error.hpp"

namespace imitree {
namespace {

std::string num(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw InvalidArgument("metrics csv: bad number '" + s + "'");
  return v;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw RuntimeError("cannot open '" + path.string() + "' for writing");
  os << text;
}

}  // namespace

const char* git_describe() { return IMITREE_GIT_DESCRIBE; }

void Metrics::append(MetricRecord r) { records_.push_back(std::move(r)); }

std::optional<MetricRecord> Metrics::last_eval() const {
  for (auto it = records_.rbegin(); it != records_.rend(); ++it)
    if (it->eval_score) return *it;
  return std::nullopt;
}

std::optional<std::int64_t> Metrics::steps_to_score(double threshold) const {
  for (const auto& r : records_)
    if (r.eval_score && *r.eval_score >= threshold) return r.env_steps;
  return std::nullopt;
}

std::string Metrics::to_csv() const {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : records_) {
    const auto& l = r.loss;
    out += std::to_string(r.env_steps) + "," + std::to_string(r.train_steps) + "," + num(l.total) + "," +
           num(l.policy) + "," + num(l.value) + "," + num(l.consistency) + "," + num(l.disc) + "," +
           num(l.gradient_penalty) + "," + num(l.bc) + "," + num(r.mean_ail_reward) + "," +
           (r.eval_return ? num(*r.eval_return) : "") + "," + (r.eval_score ? num(*r.eval_score) : "") + "\n";
  }
  return out;
}

Metrics Metrics::from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw InvalidArgument("metrics csv: unexpected header");
  Metrics m;
  while (std::getline(is, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 12) throw InvalidArgument("metrics csv: expected 12 columns");
    MetricRecord r;
    r.env_steps = static_cast<std::int64_t>(parse_double(cells[0]));
    r.train_steps = static_cast<std::int64_t>(parse_double(cells[1]));
    r.loss.total = parse_double(cells[2]);
    r.loss.policy = parse_double(cells[3]);
    r.loss.value = parse_double(cells[4]);
    r.loss.consistency = parse_double(cells[5]);
    r.loss.disc = parse_double(cells[6]);
    r.loss.gradient_penalty = parse_double(cells[7]);
    r.loss.bc = parse_double(cells[8]);
    r.mean_ail_reward = parse_double(cells[9]);
    if (!cells[10].empty()) r.eval_return = parse_double(cells[10]);
    if (!cells[11].empty()) r.eval_score = parse_double(cells[11]);
    m.append(std::move(r));
  }
  return m;
}

std::string summary_json(const RunSummary& s) {
  nlohmann::ordered_json j;
  j["env"] = s.env;
  j["seed"] = s.seed;
  j["seeds"] = s.seeds;
  j["env_steps"] = s.env_steps;
  j["train_steps"] = s.train_steps;
  j["final_return"] = s.final_return ? nlohmann::ordered_json(*s.final_return) : nullptr;
  j["final_score"] = s.final_score ? nlohmann::ordered_json(*s.final_score) : nullptr;
  j["steps_to_half"] = s.steps_to_half ? nlohmann::ordered_json(*s.steps_to_half) : nullptr;
  j["j_expert"] = s.j_expert;
  j["j_random"] = s.j_random;
  j["git_describe"] = s.git_describe;
  j["config"] = s.config_text;
  return j.dump(2) + "\n";
}

void write_run_outputs(const std::filesystem::path& dir, const Metrics& metrics, const RunSummary& summary,
                       double wall_seconds) {
  std::filesystem::create_directories(dir);
  write_file(dir / "metrics.csv", metrics.to_csv());
  write_file(dir / "summary.json", summary_json(summary));
  nlohmann::ordered_json t;
  t["wall_seconds"] = wall_seconds;
  write_file(dir / "timing.json", t.dump(2) + "\n");
}

}  // namespace imitree
