#include "sqt/harness.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "sqt/env.hpp"
#include "sqt/error.hpp"

namespace sqt {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Deterministic per-(seed, snapshot) stream for evaluation resets, kept
// separate from the training stream so evaluation never perturbs training.
std::uint64_t eval_stream_seed(std::uint64_t seed, long snapshot_index) {
  return seed * 0x9E3779B97F4A7C15ULL + 0xD1B54A32D192ED03ULL +
         static_cast<std::uint64_t>(snapshot_index);
}

RunRecord run_single_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.seed = seed;
  try {
    auto env = make_env(cfg.env_id);
    auto eval_env = make_env(cfg.env_id);
    Agent agent = Agent::for_env(cfg.algo, *env, cfg.train, seed);

    const long total = cfg.train.total_steps;
    long done_steps = 0;
    long snapshot = 0;
    while (done_steps < total) {
      const long chunk = std::min<long>(cfg.eval_interval, total - done_steps);
      const auto episodes = agent.train(*env, chunk);
      for (const auto& ep : episodes)
        rec.episode_returns.push_back(ep.episode_return);
      done_steps += chunk;
      if (chunk == cfg.eval_interval) {
        Rng eval_rng(eval_stream_seed(seed, snapshot));
        EvalPoint point;
        point.step = done_steps;
        point.eval_return =
            agent.evaluate(*eval_env, cfg.eval_episodes, eval_rng);
        point.mean_penalty = agent.chunk_mean_penalty();
        point.critic_loss = agent.chunk_mean_critic_loss();
        rec.evals.push_back(point);
        ++snapshot;
      }
    }
  } catch (const std::exception& e) {
    rec.error = e.what();  // keep partial results
  }
  if (!rec.evals.empty()) {
    rec.max_snapshot = rec.evals.front().eval_return;
    for (const auto& e : rec.evals)
      rec.max_snapshot = std::max(rec.max_snapshot, e.eval_return);
  }
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return rec;
}

void append_rows(std::string& csv, const RunRecord& rec) {
  for (const auto& e : rec.evals) {
    csv += std::to_string(rec.seed);
    csv += ',';
    csv += std::to_string(e.step);
    csv += ',';
    csv += fmt_double(e.eval_return);
    csv += ',';
    csv += fmt_double(e.mean_penalty);
    csv += ',';
    csv += fmt_double(e.critic_loss);
    csv += '\n';
  }
}

std::string csv_preamble(const ExperimentConfig& cfg) {
  std::string out = "# env=" + cfg.env_id + " algo=" + variant_name(cfg.algo) + "\n";
  out += "seed,step,eval_return,mean_penalty,critic_loss\n";
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw FormatError("trailing junk");
    return v;
  } catch (const FormatError&) {
    throw;
  } catch (...) {
    throw FormatError("bad number: '" + s + "'");
  }
}

}  // namespace

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg) {
  if (cfg.seeds.empty()) throw ConfigError("run_experiment: seed list empty");
  if (cfg.eval_interval < 1 || cfg.eval_episodes < 1)
    throw ConfigError("run_experiment: eval settings must be >= 1");
  make_env(cfg.env_id);  // fail fast on unknown ids
  Agent::for_env(cfg.algo, *make_env(cfg.env_id), cfg.train, 0);

  const int n = static_cast<int>(cfg.seeds.size());
  std::vector<RunRecord> records(n);
  std::vector<char> ready(n, 0);
  std::mutex flush_mu;
  std::string csv = csv_preamble(cfg);
  int flushed = 0;

  // Persist the longest completed seed prefix; rows stay in seed order no
  // matter which worker finishes first.
  auto mark_done_and_flush = [&](int i) {
    std::lock_guard lock(flush_mu);
    ready[i] = 1;
    bool grew = false;
    while (flushed < n && ready[flushed]) {
      append_rows(csv, records[flushed]);
      ++flushed;
      grew = true;
    }
    if (grew && !cfg.out_path.empty()) write_text_file(cfg.out_path, csv);
  };

  const int jobs = std::max(1, std::min<int>(cfg.jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) {
      records[i] = run_single_seed(cfg, cfg.seeds[i]);
      mark_done_and_flush(i);
    }
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        while (true) {
          const int i = next.fetch_add(1);
          if (i >= n) return;
          records[i] = run_single_seed(cfg, cfg.seeds[i]);
          mark_done_and_flush(i);
        }
      });
    }
    for (auto& t : workers) t.join();
  }

  if (!cfg.out_path.empty()) write_text_file(cfg.out_path, csv);
  return records;
}

std::string results_csv_text(const ExperimentConfig& cfg,
                             const std::vector<RunRecord>& records) {
  std::string csv = csv_preamble(cfg);
  for (const auto& rec : records) append_rows(csv, rec);
  return csv;
}

void write_results_csv(const std::string& path, const ExperimentConfig& cfg,
                       const std::vector<RunRecord>& records) {
  write_text_file(path, results_csv_text(cfg, records));
}

ParsedResults parse_results_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  ParsedResults out;
  bool saw_header = false;
  std::map<std::uint64_t, RunRecord> by_seed;
  std::vector<std::uint64_t> seed_order;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream meta(line.substr(1));
      std::string tok;
      while (meta >> tok) {
        if (tok.rfind("env=", 0) == 0) out.env = tok.substr(4);
        if (tok.rfind("algo=", 0) == 0) out.algo = tok.substr(5);
      }
      continue;
    }
    if (!saw_header) {
      if (line != "seed,step,eval_return,mean_penalty,critic_loss")
        throw FormatError("results csv: unexpected header '" + line + "'");
      saw_header = true;
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != 5)
      throw FormatError("results csv: expected 5 columns, got " +
                        std::to_string(cells.size()));
    const std::uint64_t seed = std::stoull(cells[0]);
    EvalPoint p;
    p.step = std::stol(cells[1]);
    p.eval_return = parse_double(cells[2]);
    p.mean_penalty = parse_double(cells[3]);
    p.critic_loss = parse_double(cells[4]);
    auto [it, inserted] = by_seed.try_emplace(seed);
    if (inserted) {
      it->second.seed = seed;
      seed_order.push_back(seed);
    }
    it->second.evals.push_back(p);
  }
  if (!saw_header) throw FormatError("results csv: missing header");
  for (std::uint64_t s : seed_order) {
    RunRecord& rec = by_seed[s];
    if (!rec.evals.empty()) {
      rec.max_snapshot = rec.evals.front().eval_return;
      for (const auto& e : rec.evals)
        rec.max_snapshot = std::max(rec.max_snapshot, e.eval_return);
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

ParsedResults parse_results_csv(const std::string& path) {
  return parse_results_text(read_text_file(path));
}

namespace {

// (env, score) pairs in first-appearance order, from either accepted
// schema.
std::vector<std::pair<std::string, double>> scores_from_file(
    const std::string& path) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string first;
  while (std::getline(in, first)) {
    first = trim(first);
    if (!first.empty() && first[0] != '#') break;
  }
  if (first.rfind("env,score", 0) == 0) {
    std::vector<std::string> order;
    std::map<std::string, std::pair<double, int>> acc;
    std::string line;
    while (std::getline(in, line)) {
      line = trim(line);
      if (line.empty() || line[0] == '#') continue;
      const auto cells = split(line, ',');
      if (cells.size() != 2)
        throw FormatError("summary csv: expected 2 columns in '" + line + "'");
      const std::string env = trim(cells[0]);
      const double score = parse_double(cells[1]);
      auto [it, inserted] = acc.try_emplace(env, std::make_pair(0.0, 0));
      if (inserted) order.push_back(env);
      it->second.first += score;
      it->second.second += 1;
    }
    if (order.empty()) throw FormatError("summary csv: no data rows");
    std::vector<std::pair<std::string, double>> out;
    for (const auto& env : order)
      out.emplace_back(env, acc[env].first / acc[env].second);
    return out;
  }

  const ParsedResults parsed = parse_results_text(text);
  if (parsed.records.empty())
    throw FormatError("results csv: no rows to score");
  double sum = 0.0;
  for (const auto& rec : parsed.records) {
    if (rec.evals.empty())
      throw FormatError("results csv: seed without eval rows");
    sum += rec.max_snapshot;
  }
  const std::string label =
      parsed.env.empty() ? std::string("results") : parsed.env;
  return {{label, sum / parsed.records.size()}};
}

}  // namespace

ComparisonTable compare(const std::string& path_a, const std::string& path_b) {
  const auto a = scores_from_file(path_a);
  const auto b = scores_from_file(path_b);
  if (a.size() != b.size())
    throw FormatError("compare: files cover different env sets");
  std::map<std::string, double> b_by_env;
  for (const auto& [env, score] : b) b_by_env[env] = score;

  ComparisonTable table;
  for (const auto& [env, score_a] : a) {
    auto it = b_by_env.find(env);
    if (it == b_by_env.end())
      throw FormatError("compare: env '" + env + "' missing from second file");
    CompareRow row;
    row.env = env;
    row.mean_max_a = score_a;
    row.mean_max_b = it->second;
    if (row.mean_max_b == 0.0)
      throw FormatError("compare: zero baseline for env '" + env + "'");
    row.improvement_pct =
        100.0 * (row.mean_max_a - row.mean_max_b) / row.mean_max_b;
    table.total_pct += row.improvement_pct;
    table.rows.push_back(row);
  }
  return table;
}

std::string format_comparison(const ComparisonTable& table) {
  std::ostringstream os;
  os << "environment            candidate      baseline       improvement\n";
  char buf[160];
  for (const auto& row : table.rows) {
    std::snprintf(buf, sizeof buf, "%-22s %-14.4g %-14.4g %+.1f%%\n",
                  row.env.c_str(), row.mean_max_a, row.mean_max_b,
                  row.improvement_pct);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "%-22s %-14s %-14s %+.1f%%\n", "total", "",
                "", table.total_pct);
  os << buf;
  return os.str();
}

std::string bias_csv_text(const BiasReport& report) {
  std::string csv = "seed,algo,deviation,suboptimal_flag\n";
  for (const auto& row : report.per_seed) {
    csv += std::to_string(row.seed);
    csv += ',';
    csv += report.algo;
    csv += ',';
    csv += fmt_double(row.deviation);
    csv += ',';
    csv += row.suboptimal ? '1' : '0';
    csv += '\n';
  }
  return csv;
}

void write_bias_csv(const std::string& path, const BiasReport& report) {
  write_text_file(path, bias_csv_text(report));
}

std::string bias_summary_line(const BiasReport& report) {
  const bool over = report.mean_deviation > 3.0 * report.std_error;
  const bool under = report.mean_deviation < -3.0 * report.std_error;
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "%s: mean deviation %+.4f (se %.4f), %zu seeds, suboptimal "
                "%.0f%% -> %s",
                report.algo.c_str(), report.mean_deviation, report.std_error,
                report.per_seed.size(), 100.0 * report.suboptimal_fraction,
                over ? "over-biased"
                     : (under ? "under-biased" : "not over-biased"));
  return buf;
}

std::vector<std::pair<std::string, std::string>> parse_kv_text(
    const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw FormatError("config line " + std::to_string(line_no) +
                        ": expected key=value, got '" + t + "'");
    out.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> parse_kv_file(
    const std::string& path) {
  return parse_kv_text(read_text_file(path));
}

std::vector<std::uint64_t> parse_seed_spec(const std::string& spec) {
  const std::string s = trim(spec);
  if (s.empty()) throw ConfigError("seed spec is empty");
  const auto dots = s.find("..");
  std::vector<std::uint64_t> seeds;
  try {
    if (dots != std::string::npos) {
      const std::uint64_t lo = std::stoull(s.substr(0, dots));
      const std::uint64_t hi = std::stoull(s.substr(dots + 2));
      if (hi < lo) throw ConfigError("seed range is reversed: " + s);
      for (std::uint64_t v = lo; v <= hi; ++v) seeds.push_back(v);
    } else {
      for (const auto& tok : split(s, ','))
        seeds.push_back(std::stoull(trim(tok)));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    throw ConfigError("bad seed spec: '" + spec + "'");
  }
  return seeds;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write file: " + path);
  out << text;
}

}  // namespace sqt
