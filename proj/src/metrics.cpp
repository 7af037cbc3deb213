#include "gdi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace gdi {

namespace {

constexpr double kFramesPerDay = 5184000.0;  // 60Hz * 86400s, one emulator-day

double normalized(double raw, double lo, double hi, const char* what) {
  double denom = hi - lo;
  if (denom == 0.0) throw std::invalid_argument(std::string(what) + ": zero reference gap");
  return (raw - lo) / denom * 100.0;
}

double parse_number(const std::string& field, const std::string& context) {
  size_t pos = 0;
  double v;
  try {
    v = std::stod(field, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("score table: bad number '" + field + "' in " + context);
  }
  if (pos != field.size())
    throw std::invalid_argument("score table: trailing junk in '" + field + "' in " + context);
  if (!std::isfinite(v))
    throw std::invalid_argument("score table: non-finite value in " + context);
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

double hns(double raw, double random_score, double human_avg) {
  return normalized(raw, random_score, human_avg, "hns");
}

double hwrns(double raw, double random_score, double hwr) {
  return normalized(raw, random_score, hwr, "hwrns");
}

double saber(double raw, double random_score, double hwr) {
  return std::clamp(hwrns(raw, random_score, hwr), 0.0, 200.0);
}

Aggregate aggregate(const std::vector<std::optional<double>>& values) {
  std::vector<double> present;
  present.reserve(values.size());
  for (const auto& v : values)
    if (v.has_value()) present.push_back(*v);
  if (present.empty()) throw std::invalid_argument("aggregate: no values present");
  Aggregate out;
  for (double v : present) out.mean += v;
  out.mean /= static_cast<double>(present.size());
  std::sort(present.begin(), present.end());
  size_t n = present.size();
  out.median = (n % 2 == 1) ? present[n / 2] : 0.5 * (present[n / 2 - 1] + present[n / 2]);
  return out;
}

int hwrb(const std::vector<std::optional<double>>& hwrns_values) {
  int count = 0;
  for (const auto& v : hwrns_values)
    if (v.has_value() && *v >= 100.0) ++count;
  return count;
}

double playtime_days(double frames) {
  if (frames < 0.0) throw std::invalid_argument("playtime_days: negative frames");
  return frames / kFramesPerDay;
}

double learning_efficiency(double metric_value, double frames) {
  if (!(frames > 0.0)) throw std::invalid_argument("learning_efficiency: frames must be > 0");
  return metric_value / frames;
}

std::vector<ScoreRow> load_score_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("score table: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("score table: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "game,random,human_avg,hwr,score")
    throw std::invalid_argument("score table: unexpected header '" + line + "'");

  std::vector<ScoreRow> rows;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f = split_csv(line);
    if (f.size() != 5)
      throw std::invalid_argument("score table: expected 5 fields, got line '" + line + "'");
    ScoreRow row;
    row.game = f[0];
    if (row.game.empty()) throw std::invalid_argument("score table: empty game name");
    if (!seen.insert(row.game).second)
      throw std::invalid_argument("score table: duplicate game '" + row.game + "'");
    row.random_score = parse_number(f[1], row.game);
    row.human_avg = parse_number(f[2], row.game);
    row.hwr = parse_number(f[3], row.game);
    if (f[4] != "NA") row.score = parse_number(f[4], row.game);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("score table: no data rows");
  return rows;
}

}  // namespace gdi
