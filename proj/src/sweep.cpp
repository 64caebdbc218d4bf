#include "starswipt/sweep.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "starswipt/rng.hpp"

namespace starswipt::sweep {
namespace {

using Clock = std::chrono::steady_clock;

constexpr const char* kCsvHeader =
    "seed,scheme,N,M,K,K_r,P_max_dbm,E_min_dbm,sum_rate_bits_per_s_hz,iterations,status,wall_ms";

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Shortest decimal form that parses back to the same double; always uses
// '.' regardless of locale.
std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view key, std::string_view value) {
  double out = 0.0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc{} || res.ptr != value.data() + value.size())
    throw ConfigError("key '" + std::string(key) + "': not a number: '" + std::string(value) +
                      "'");
  return out;
}

std::int64_t parse_int(std::string_view key, std::string_view value) {
  std::int64_t out = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc{} || res.ptr != value.data() + value.size())
    throw ConfigError("key '" + std::string(key) + "': not an integer: '" + std::string(value) +
                      "'");
  return out;
}

std::uint64_t parse_u64(std::string_view key, std::string_view value) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc{} || res.ptr != value.data() + value.size())
    throw ConfigError("key '" + std::string(key) + "': not an unsigned integer: '" +
                      std::string(value) + "'");
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("key '" + std::string(key) + "': expected true/false, got '" +
                    std::string(value) + "'");
}

std::vector<std::string_view> split_list(std::string_view value) {
  std::vector<std::string_view> parts;
  while (!value.empty()) {
    const auto comma = value.find(',');
    parts.push_back(trim(value.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    value.remove_prefix(comma + 1);
  }
  return parts;
}

Vec3 parse_vec3(std::string_view key, std::string_view value) {
  const auto parts = split_list(value);
  if (parts.size() != 3)
    throw ConfigError("key '" + std::string(key) + "': expected three comma-separated numbers");
  return Vec3(parse_double(key, parts[0]), parse_double(key, parts[1]),
              parse_double(key, parts[2]));
}

baselines::Scheme parse_scheme(std::string_view name) {
  using baselines::Scheme;
  for (Scheme s : {Scheme::EsMode, Scheme::EqualAmplitudeEs, Scheme::ConventionalRis,
                   Scheme::WithoutRis})
    if (name == baselines::to_string(s)) return s;
  throw ConfigError("key 'schemes': unknown scheme '" + std::string(name) + "'");
}

Axis parse_axis(std::string_view value) {
  if (value == "N") return Axis::N;
  if (value == "M") return Axis::M;
  if (value == "E_min_dbm") return Axis::EMinDbm;
  throw ConfigError("key 'axis': expected N, M, or E_min_dbm, got '" + std::string(value) + "'");
}

std::vector<std::pair<std::string, std::string>> read_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s(line);
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    const auto key = trim(s.substr(0, eq));
    const auto value = trim(s.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    out.emplace_back(std::string(key), std::string(value));
  }
  return out;
}

// Applies one scenario or AO key. Returns false when the key belongs to
// neither, so the sweep loader can try its own key set first.
bool apply_config_key(std::string_view key, std::string_view value, SystemConfig& cfg,
                      ao::AoOptions& ao, bool& saw_k, bool& saw_k_r, bool& saw_k_t,
                      std::int64_t& total_k) {
  if (key == "m") cfg.m = static_cast<int>(parse_int(key, value));
  else if (key == "n") cfg.n = static_cast<int>(parse_int(key, value));
  else if (key == "k") { total_k = parse_int(key, value); saw_k = true; }
  else if (key == "k_r") { cfg.k_r = static_cast<int>(parse_int(key, value)); saw_k_r = true; }
  else if (key == "k_t") { cfg.k_t = static_cast<int>(parse_int(key, value)); saw_k_t = true; }
  else if (key == "p_max_dbm") cfg.p_max_dbm = parse_double(key, value);
  else if (key == "sigma2_dbm") cfg.sigma2_dbm = parse_double(key, value);
  else if (key == "delta2_dbm") cfg.delta2_dbm = parse_double(key, value);
  else if (key == "e_min_dbm") cfg.e_min_dbm = parse_double(key, value);
  else if (key == "eta") cfg.eta = parse_double(key, value);
  else if (key == "c0_db") cfg.c0_db = parse_double(key, value);
  else if (key == "d0_m") cfg.d0_m = parse_double(key, value);
  else if (key == "alpha_bs_ris") cfg.alpha_bs_ris = parse_double(key, value);
  else if (key == "alpha_ris_user") cfg.alpha_ris_user = parse_double(key, value);
  else if (key == "alpha_bs_user") cfg.alpha_bs_user = parse_double(key, value);
  else if (key == "rician_k_db") cfg.rician_k_db = parse_double(key, value);
  else if (key == "bs_pos") cfg.bs_pos = parse_vec3(key, value);
  else if (key == "ris_pos") cfg.ris_pos = parse_vec3(key, value);
  else if (key == "region_center_r") cfg.region_center_r = parse_vec3(key, value);
  else if (key == "region_center_t") cfg.region_center_t = parse_vec3(key, value);
  else if (key == "user_region_radius") cfg.user_region_radius = parse_double(key, value);
  else if (key == "seed") cfg.seed = parse_u64(key, value);
  else if (key == "epsilon") ao.epsilon = parse_double(key, value);
  else if (key == "max_outer") ao.max_outer = static_cast<int>(parse_int(key, value));
  else if (key == "randomization_trials")
    ao.randomization.trials = static_cast<int>(parse_int(key, value));
  else if (key == "paper_literal_aux") ao.paper_literal_aux = parse_bool(key, value);
  else if (key == "phase_only_recovery") ao.phase_only_recovery = parse_bool(key, value);
  else if (key == "first_diag_half") ao.first_diag_half = parse_bool(key, value);
  else if (key == "freeze_rho_half") ao.freeze_rho_half = parse_bool(key, value);
  else return false;
  return true;
}

// The user-count keys interlock: k alone splits evenly (reflection side
// first), k with one side fixes the other, and inconsistent triples are
// rejected by name.
void settle_user_counts(SystemConfig& cfg, bool saw_k, bool saw_k_r, bool saw_k_t,
                        std::int64_t total_k) {
  if (!saw_k) return;
  if (total_k < 1) throw ConfigError("key 'k': must be at least 1");
  if (saw_k_r && cfg.k_r > total_k)
    throw ConfigError("key 'k_r': " + std::to_string(cfg.k_r) + " exceeds k = " +
                      std::to_string(total_k));
  if (saw_k_t && cfg.k_t > total_k)
    throw ConfigError("key 'k_t': " + std::to_string(cfg.k_t) + " exceeds k = " +
                      std::to_string(total_k));
  if (saw_k_r && saw_k_t) {
    if (cfg.k_r + cfg.k_t != total_k)
      throw ConfigError("key 'k': k_r + k_t = " + std::to_string(cfg.k_r + cfg.k_t) +
                        " does not match k = " + std::to_string(total_k));
  } else if (saw_k_r) {
    cfg.k_t = static_cast<int>(total_k) - cfg.k_r;
  } else if (saw_k_t) {
    cfg.k_r = static_cast<int>(total_k) - cfg.k_t;
  } else {
    cfg.k_r = static_cast<int>(total_k) / 2;
    cfg.k_t = static_cast<int>(total_k) - cfg.k_r;
  }
}

void validate_config(const SystemConfig& cfg) {
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::string format_row_csv(const ResultRow& r) {
  std::string line;
  line += std::to_string(r.seed);
  line += ',';
  line += r.scheme;
  line += ',';
  line += std::to_string(r.n);
  line += ',';
  line += std::to_string(r.m);
  line += ',';
  line += std::to_string(r.k);
  line += ',';
  line += std::to_string(r.k_r);
  line += ',';
  line += fmt(r.p_max_dbm);
  line += ',';
  line += fmt(r.e_min_dbm);
  line += ',';
  line += fmt(r.sum_rate_bits_per_s_hz);
  line += ',';
  line += std::to_string(r.iterations);
  line += ',';
  line += r.status;
  line += ',';
  line += fmt(r.wall_ms);
  return line;
}

void write_summary(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write summary file: " + path);
  out << "N,M,E_min_dbm,scheme,mean_sum_rate_bits_per_s_hz,std_sum_rate_bits_per_s_hz,trials\n";
  for (const SummaryRow& s : summarize(rows))
    out << s.n << ',' << s.m << ',' << fmt(s.e_min_dbm) << ',' << s.scheme << ',' << fmt(s.mean)
        << ',' << fmt(s.stddev) << ',' << s.count << '\n';
  if (!out.flush()) throw std::runtime_error("write failed: " + path);
}

}  // namespace

const char* to_string(Axis axis) {
  switch (axis) {
    case Axis::N: return "N";
    case Axis::M: return "M";
    case Axis::EMinDbm: return "E_min_dbm";
  }
  return "unknown";
}

bool is_failure(const ResultRow& row) {
  return row.status == "degraded" || row.status == "error";
}

std::pair<SystemConfig, ao::AoOptions> load_config(const std::string& path) {
  SystemConfig cfg;
  ao::AoOptions ao;
  bool saw_k = false, saw_k_r = false, saw_k_t = false;
  std::int64_t total_k = 0;
  for (const auto& [key, value] : read_kv_file(path))
    if (!apply_config_key(key, value, cfg, ao, saw_k, saw_k_r, saw_k_t, total_k))
      throw ConfigError("unknown key '" + key + "' in " + path);
  settle_user_counts(cfg, saw_k, saw_k_r, saw_k_t, total_k);
  validate_config(cfg);
  if (ao.epsilon <= 0.0) throw ConfigError("key 'epsilon': must be positive");
  if (ao.max_outer < 1) throw ConfigError("key 'max_outer': must be at least 1");
  return {cfg, ao};
}

SweepSpec load_sweep(const std::string& path) {
  SweepSpec spec;
  bool saw_k = false, saw_k_r = false, saw_k_t = false;
  std::int64_t total_k = 0;
  bool saw_axis = false, saw_values = false, saw_schemes = false;
  for (const auto& [key, value] : read_kv_file(path)) {
    if (key == "axis") {
      spec.axis = parse_axis(value);
      saw_axis = true;
    } else if (key == "values") {
      spec.values.clear();
      for (const auto part : split_list(value)) spec.values.push_back(parse_double(key, part));
      saw_values = true;
    } else if (key == "schemes") {
      spec.schemes.clear();
      for (const auto part : split_list(value)) spec.schemes.push_back(parse_scheme(part));
      saw_schemes = true;
    } else if (key == "trials") {
      spec.trials = static_cast<int>(parse_int(key, value));
    } else if (key == "out") {
      spec.out = value;
    } else if (key == "seed") {
      spec.root_seed = parse_u64(key, value);
    } else if (!apply_config_key(key, value, spec.base, spec.ao, saw_k, saw_k_r, saw_k_t,
                                 total_k)) {
      throw ConfigError("unknown key '" + key + "' in " + path);
    }
  }
  settle_user_counts(spec.base, saw_k, saw_k_r, saw_k_t, total_k);
  if (!saw_axis) throw ConfigError("key 'axis': missing in " + path);
  if (!saw_values || spec.values.empty()) throw ConfigError("key 'values': missing in " + path);
  for (std::size_t i = 1; i < spec.values.size(); ++i)
    if (!(spec.values[i] > spec.values[i - 1]))
      throw ConfigError("key 'values': must be strictly increasing");
  if (spec.axis != Axis::EMinDbm)
    for (const double v : spec.values)
      if (v < 1.0 || v != std::floor(v))
        throw ConfigError(std::string("key 'values': axis ") + to_string(spec.axis) +
                          " needs positive integers");
  if (!saw_schemes || spec.schemes.empty()) throw ConfigError("key 'schemes': missing in " + path);
  if (spec.trials < 1) throw ConfigError("key 'trials': must be at least 1");
  validate_config(spec.base);
  if (spec.ao.epsilon <= 0.0) throw ConfigError("key 'epsilon': must be positive");
  if (spec.ao.max_outer < 1) throw ConfigError("key 'max_outer': must be at least 1");
  return spec;
}

std::vector<ResultRow> run_sweep(const SweepSpec& spec, int threads, bool timing) {
  if (!spec.out.empty()) {
    std::ofstream probe(spec.out, std::ios::binary | std::ios::app);
    if (!probe) throw std::runtime_error("output path is not writable: " + spec.out);
  }

  const std::size_t num_tasks = spec.values.size() * spec.schemes.size() *
                                static_cast<std::size_t>(spec.trials);
  std::vector<ResultRow> rows(num_tasks);

  const auto worker_body = [&](std::size_t index) {
    const std::size_t vi = index / (spec.schemes.size() * spec.trials);
    const std::size_t si = (index / spec.trials) % spec.schemes.size();
    const int trial = static_cast<int>(index % spec.trials);

    SystemConfig cfg = spec.base;
    switch (spec.axis) {
      case Axis::N: cfg.n = static_cast<int>(spec.values[vi]); break;
      case Axis::M: cfg.m = static_cast<int>(spec.values[vi]); break;
      case Axis::EMinDbm: cfg.e_min_dbm = spec.values[vi]; break;
    }
    cfg.seed = derive_seed(spec.root_seed, "sweep-trial", trial);

    ResultRow& row = rows[index];
    row.seed = cfg.seed;
    row.scheme = baselines::to_string(spec.schemes[si]);
    row.n = cfg.n;
    row.m = cfg.m;
    row.k = cfg.k();
    row.k_r = cfg.k_r;
    row.p_max_dbm = cfg.p_max_dbm;
    row.e_min_dbm = cfg.e_min_dbm;

    const auto start = Clock::now();
    try {
      const ChannelSet channels = build_channels(cfg);
      RngStream rng(derive_seed(cfg.seed, "run"));
      const ao::SolveReport rep =
          baselines::run_baseline(spec.schemes[si], channels, cfg, spec.ao, rng);
      row.status = ao::to_string(rep.status);
      row.iterations = rep.iterations;
      if (rep.status != ao::AoStatus::Infeasible) row.sum_rate_bits_per_s_hz = rep.sum_rate;
    } catch (const std::exception& e) {
      row.status = "error";
    }
    if (timing)
      row.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  };

  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(num_tasks)));
  if (workers == 1) {
    for (std::size_t i = 0; i < num_tasks; ++i) worker_body(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < num_tasks; i = next.fetch_add(1))
          worker_body(i);
      });
    for (std::thread& t : pool) t.join();
  }
  return rows;
}

void write_results(const std::vector<ResultRow>& rows, const std::string& path, Format format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write results file: " + path);
  if (format == Format::Csv) {
    out << kCsvHeader << '\n';
    for (const ResultRow& r : rows) out << format_row_csv(r) << '\n';
  } else {
    for (const ResultRow& r : rows) {
      nlohmann::ordered_json j;
      j["seed"] = r.seed;
      j["scheme"] = r.scheme;
      j["N"] = r.n;
      j["M"] = r.m;
      j["K"] = r.k;
      j["K_r"] = r.k_r;
      j["P_max_dbm"] = r.p_max_dbm;
      j["E_min_dbm"] = r.e_min_dbm;
      j["sum_rate_bits_per_s_hz"] = r.sum_rate_bits_per_s_hz;
      j["iterations"] = r.iterations;
      j["status"] = r.status;
      j["wall_ms"] = r.wall_ms;
      out << j.dump() << '\n';
    }
  }
  if (!out.flush()) throw std::runtime_error("write failed: " + path);
  write_summary(rows, summary_path(path));
}

std::vector<ResultRow> read_results_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open results file: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader)
    throw std::runtime_error("unexpected CSV header in " + path);
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_list(line);
    if (fields.size() != 12) throw std::runtime_error("malformed CSV row in " + path);
    ResultRow r;
    r.seed = parse_u64("seed", fields[0]);
    r.scheme = std::string(fields[1]);
    r.n = static_cast<int>(parse_int("N", fields[2]));
    r.m = static_cast<int>(parse_int("M", fields[3]));
    r.k = static_cast<int>(parse_int("K", fields[4]));
    r.k_r = static_cast<int>(parse_int("K_r", fields[5]));
    r.p_max_dbm = parse_double("P_max_dbm", fields[6]);
    r.e_min_dbm = parse_double("E_min_dbm", fields[7]);
    r.sum_rate_bits_per_s_hz = parse_double("sum_rate_bits_per_s_hz", fields[8]);
    r.iterations = static_cast<int>(parse_int("iterations", fields[9]));
    r.status = std::string(fields[10]);
    r.wall_ms = parse_double("wall_ms", fields[11]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  std::vector<SummaryRow> cells;
  const auto cell_of = [&](const ResultRow& r) -> SummaryRow& {
    for (SummaryRow& s : cells)
      if (s.n == r.n && s.m == r.m && s.e_min_dbm == r.e_min_dbm && s.scheme == r.scheme)
        return s;
    SummaryRow s;
    s.n = r.n;
    s.m = r.m;
    s.e_min_dbm = r.e_min_dbm;
    s.scheme = r.scheme;
    return cells.emplace_back(std::move(s));
  };
  // Mean pass; cells keep first-appearance order, which the writer already
  // sorted by (value, scheme, trial).
  for (const ResultRow& r : rows) {
    if (r.status == "error") continue;
    SummaryRow& s = cell_of(r);
    s.mean += r.sum_rate_bits_per_s_hz;
    ++s.count;
  }
  for (SummaryRow& s : cells)
    if (s.count > 0) s.mean /= s.count;
  for (const ResultRow& r : rows) {
    if (r.status == "error") continue;
    SummaryRow& s = cell_of(r);
    const double d = r.sum_rate_bits_per_s_hz - s.mean;
    s.stddev += d * d;
  }
  for (SummaryRow& s : cells)
    s.stddev = s.count > 1 ? std::sqrt(s.stddev / (s.count - 1)) : 0.0;
  return cells;
}

std::string summary_path(const std::string& out) {
  std::filesystem::path p(out);
  p.replace_extension();
  return p.string() + ".summary.csv";
}

}  // namespace starswipt::sweep
