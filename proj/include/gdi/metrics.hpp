#pragma once

#include <optional>
#include <string>
#include <vector>

namespace gdi {

// One benchmark row: reference scores plus an optional measured score
// (absent when the run did not cover the game).
struct ScoreRow {
  std::string game;
  double random_score = 0.0;
  double human_avg = 0.0;
  double hwr = 0.0;
  std::optional<double> score;
};

// Percent of the gap from the random reference to the human reference.
double hns(double raw, double random_score, double human_avg);
// Same, against the human world record.
double hwrns(double raw, double random_score, double hwr);
// Record-normalized score capped to [0, 200].
double saber(double raw, double random_score, double hwr);

struct Aggregate {
  double mean = 0.0;
  double median = 0.0;
};

// Mean/median over the present values only; throws when all are missing.
Aggregate aggregate(const std::vector<std::optional<double>>& values);

// Number of games at or above the record line (value >= 100).
int hwrb(const std::vector<std::optional<double>>& hwrns_values);

// 200M frames of training corresponds to ~38.58 days of real-time play.
double playtime_days(double frames);
double learning_efficiency(double metric_value, double frames);

// Strict CSV: header `game,random,human_avg,hwr,score`, score may be NA.
// Throws on duplicate games, malformed numbers, or an empty table.
std::vector<ScoreRow> load_score_table(const std::string& path);

}  // namespace gdi
