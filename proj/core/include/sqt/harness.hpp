#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sqt/agent.hpp"
#include "sqt/tabular.hpp"

namespace sqt {

struct ExperimentConfig {
  std::string env_id = "point-mass";
  Variant algo = Variant::kSqt;
  TrainingConfig train;
  std::vector<std::uint64_t> seeds = {0};
  std::string out_path;     // CSV destination; empty keeps results in memory
  int eval_interval = 1000; // env steps between evaluation snapshots
  int eval_episodes = 10;
  int jobs = 1;             // parallel seed workers
};

struct EvalPoint {
  long step = 0;
  double eval_return = 0.0;
  double mean_penalty = 0.0;
  double critic_loss = 0.0;
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::vector<double> episode_returns;
  std::vector<EvalPoint> evals;
  double max_snapshot = 0.0;  // max over evals (0 when there are none)
  double wall_seconds = 0.0;  // not serialized
  std::string error;          // non-empty if training aborted; partial
                              // results above are kept
};

// Trains one agent per seed (optionally in parallel workers), evaluating
// every eval_interval env steps with eval_episodes greedy episodes on a
// fresh env. Results are merged in seed order and the CSV is flushed
// whenever a prefix of seeds has completed, so identical configs produce
// identical bytes regardless of the worker count. A training failure is
// recorded on its RunRecord; config errors throw.
std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg);

// Result CSV layout: a "# env=<id> algo=<name>" comment line, the header
// "seed,step,eval_return,mean_penalty,critic_loss", then one row per
// (seed, eval step). Doubles are written with max precision ("%.17g") so
// the round trip is exact.
void write_results_csv(const std::string& path, const ExperimentConfig& cfg,
                       const std::vector<RunRecord>& records);
std::string results_csv_text(const ExperimentConfig& cfg,
                             const std::vector<RunRecord>& records);

struct ParsedResults {
  std::string env;  // from the comment line; empty if absent
  std::string algo;
  std::vector<RunRecord> records;  // eval rows only
};

ParsedResults parse_results_csv(const std::string& path);
ParsedResults parse_results_text(const std::string& text);

struct CompareRow {
  std::string env;
  double mean_max_a = 0.0;
  double mean_max_b = 0.0;
  double improvement_pct = 0.0;  // 100 * (a - b) / b
};

struct ComparisonTable {
  std::vector<CompareRow> rows;
  double total_pct = 0.0;  // sum of row percentages
};

// Compares two result files. Accepted inputs per file:
//  - a training result CSV (schema above): scored as the mean over seeds
//    of the per-seed max eval_return, labeled by its env;
//  - a summary CSV with header "env,score" and one or more rows per env
//    (scores for the same env are averaged).
// Environments must match between the two files.
ComparisonTable compare(const std::string& path_a, const std::string& path_b);

std::string format_comparison(const ComparisonTable& table);

// Bias report CSV: header "seed,algo,deviation,suboptimal_flag".
void write_bias_csv(const std::string& path, const BiasReport& report);
std::string bias_csv_text(const BiasReport& report);

// One-line verdict per report, e.g. "q: mean deviation +0.41 (se 0.03),
// 100 seeds -> over-biased".
std::string bias_summary_line(const BiasReport& report);

// Key=value configuration text: one "key=value" pair per line, '#'
// comments, blank lines ignored. Returns pairs in file order.
std::vector<std::pair<std::string, std::string>> parse_kv_text(
    const std::string& text);
std::vector<std::pair<std::string, std::string>> parse_kv_file(
    const std::string& path);

// Seed set syntax: "a..b" (inclusive range), or comma-separated integers.
std::vector<std::uint64_t> parse_seed_spec(const std::string& spec);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace sqt
