#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "starswipt/ao.hpp"
#include "starswipt/baselines.hpp"
#include "starswipt/scenario.hpp"

namespace starswipt::sweep {

// Raised for malformed config or sweep files; the message names the
// offending key or file.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Axis { N, M, EMinDbm };

const char* to_string(Axis axis);

// One Monte-Carlo experiment: a list of axis values, a list of schemes, and
// a number of trials per (value, scheme) cell. The child seed of a trial
// depends only on the trial index, so every axis value and every scheme
// sees the same channel realizations and the comparisons are paired the way
// figure averages assume. In particular the no-surface scheme produces
// identical rates across all values of the element-count axis.
struct SweepSpec {
  Axis axis = Axis::N;
  std::vector<double> values;  // strictly increasing; integral for N and M
  std::vector<baselines::Scheme> schemes;
  int trials = 20;
  std::uint64_t root_seed = 1;
  SystemConfig base;
  ao::AoOptions ao;
  std::string out;  // result path; summary lands next to it
};

// One completed (or failed) solve. Field names double as the CSV header.
struct ResultRow {
  std::uint64_t seed = 0;  // child seed, channels and run stream derive from it
  std::string scheme;
  int n = 0;
  int m = 0;
  int k = 0;
  int k_r = 0;
  double p_max_dbm = 0.0;
  double e_min_dbm = 0.0;
  double sum_rate_bits_per_s_hz = 0.0;  // 0 for infeasible and error rows
  int iterations = 0;
  std::string status;  // AO status name, or "error" for an escaped exception
  double wall_ms = 0.0;

  bool operator==(const ResultRow&) const = default;
};

// Per (n, m, e_min_dbm, scheme) cell statistics over the rows that carry a
// solver verdict (everything except "error" rows). Sample standard
// deviation, zero for a single trial.
struct SummaryRow {
  int n = 0;
  int m = 0;
  double e_min_dbm = 0.0;
  std::string scheme;
  double mean = 0.0;
  double stddev = 0.0;
  int count = 0;
};

enum class Format { Csv, Jsonl };

// Flat key = value file, '#' comments. Keys mirror the scenario and AO
// option fields (dB/dBm at the file boundary); unknown keys raise
// ConfigError naming the key, and an empty file yields the defaults.
std::pair<SystemConfig, ao::AoOptions> load_config(const std::string& path);

// Same key space plus the sweep keys: axis, values, schemes, trials, seed
// (the root seed), out.
SweepSpec load_sweep(const std::string& path);

// Runs the full grid. Rows come back ordered by (value, scheme, trial)
// regardless of the worker count. Solver failures become rows with their
// status; an unwritable output path throws before any solve starts. Wall
// times are recorded only when `timing` is set, keeping the default output
// byte-reproducible.
std::vector<ResultRow> run_sweep(const SweepSpec& spec, int threads = 1, bool timing = false);

// Writes the rows (CSV column order above, '.' decimal, '\n' newlines, or
// JSON lines with identical field names) plus the summary sidecar at
// summary_path(path). Doubles use shortest round-trip formatting.
void write_results(const std::vector<ResultRow>& rows, const std::string& path, Format format);

// Inverse of the CSV writer, for round-trip checks and summary audits.
std::vector<ResultRow> read_results_csv(const std::string& path);

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

// out.csv -> out.summary.csv; an extensionless path gains .summary.csv.
std::string summary_path(const std::string& out);

// True when a row reports a failed solve: degraded runs and escaped
// exceptions. Infeasible instances are valid outcomes, not failures.
bool is_failure(const ResultRow& row);

}  // namespace starswipt::sweep
