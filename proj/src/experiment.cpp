#include "polyfilt/experiment.hpp"

#include "polyfilt/ensemble_filters.hpp"
#include "polyfilt/localization.hpp"
#include "polyfilt/models.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace polyfilt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::vector<std::pair<FilterKind, const char*>>& filter_names() {
  static const std::vector<std::pair<FilterKind, const char*>> names = {
      {FilterKind::engmf, "engmf"},   {FilterKind::enkf, "enkf"},         {FilterKind::bcpf, "bcpf"},
      {FilterKind::bpf, "bpf"},       {FilterKind::enkcpf, "enkcpf"},     {FilterKind::encpf, "encpf"},
      {FilterKind::nofilter, "nofilter"}, {FilterKind::bayes_reference, "bayes_reference"}};
  return names;
}

/// CSV column names, in column order.
const std::vector<std::pair<FilterKind, const char*>>& csv_columns() {
  static const std::vector<std::pair<FilterKind, const char*>> cols = {
      {FilterKind::engmf, "rmseEnGMF"},       {FilterKind::enkf, "rmseEnKF"},
      {FilterKind::bcpf, "rmseBCPF"},         {FilterKind::bpf, "rmseBPF"},
      {FilterKind::enkcpf, "rmseEnKCPF"},     {FilterKind::encpf, "rmseEnCPF"},
      {FilterKind::nofilter, "rmseNoFilter"}, {FilterKind::bayes_reference, "rmseBayes"}};
  return cols;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const double v = std::stod(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(Errc::invalid_argument, "setting '" + key + "': not a number: " + value);
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(Errc::invalid_argument, "setting '" + key + "': not an integer: " + value);
}

std::optional<double> parse_optional(const std::string& key, const std::string& value) {
  if (value == "none" || value.empty()) return std::nullopt;
  return parse_double(key, value);
}

RngStream task_stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t a, std::uint64_t b = 0) {
  return RngStream(seed, mix64(mix64(tag) ^ mix64(a ^ mix64(b + 0x51ED27))));
}

enum : std::uint64_t { kTruthTag = 1, kEnsembleTag = 2, kFilterTag = 3 };

Vector model_step(Scenario s, const Vector& x) {
  return s == Scenario::ikeda ? ikeda_step(x) : l96_step(x);
}

Index state_dim(Scenario s) { return s == Scenario::ikeda ? 2 : L96Params{}.n; }

double noise_var(const ExperimentConfig& cfg) { return cfg.obs_noise_var.value_or(1.0); }

MeasurementModel scenario_model(Scenario s, double var) {
  if (s == Scenario::ikeda) return range_measurement(2, GaussianNoise{Matrix::Constant(1, 1, var)});
  MeasurementModel m = identity_measurement(state_dim(s));
  m.noise = GaussianNoise{var * Matrix::Identity(m.meas_dim, m.meas_dim)};
  return m;
}

/// Same model with the Gaussian noise replaced by the uniform law with equal
/// moments, which is what the EnCPF can consume.
MeasurementModel uniformized(MeasurementModel m) {
  const Matrix R = gaussian_cov(m);
  m.noise = MixtureNoise{{MixtureTerm{1.0, Vector::Zero(m.meas_dim), R, KernelShape::uniform}}};
  return m;
}

/// Ikeda: independent points on the chaotic attractor. L96: x0 + N(0, I).
Ensemble initial_ensemble(Scenario s, const Vector& x0, Index N, RngStream& rng) {
  Ensemble ens{Matrix(x0.size(), N)};
  for (Index i = 0; i < N; ++i)
    ens.members.col(i) = s == Scenario::ikeda ? ikeda_attractor_point(rng) : Vector(x0 + rng.normal_vector(x0.size()));
  return ens;
}

BaselineConfig baseline_config(const ExperimentConfig& cfg) {
  BaselineConfig b;
  b.inflation = cfg.inflation;
  b.localization_radius = cfg.localization_radius;
  b.defensive = cfg.defensive;
  if (cfg.process_noise_var) {
    const Index n = state_dim(cfg.scenario);
    b.process_noise_cov = *cfg.process_noise_var * Matrix::Identity(n, n);
  }
  b.enkf_gain = cfg.enkf_gain;
  return b;
}

/// Runs one filter over the whole window and returns the posterior means.
std::vector<Vector> run_filter(FilterKind kind, const ExperimentConfig& cfg, const TwinData& twin,
                               Ensemble ens, RngStream& rng) {
  const MeasurementModel model = scenario_model(cfg.scenario, noise_var(cfg));
  const MeasurementModel uniform_model =
      kind == FilterKind::encpf ? uniformized(model) : model;
  BaselineConfig base = baseline_config(cfg);
  if (kind != FilterKind::bpf && kind != FilterKind::bayes_reference) base.process_noise_cov.reset();
  if (kind != FilterKind::enkf) base.inflation = 1.0;
  KdeConfig kde;
  kde.localization_radius = cfg.localization_radius;
  HitAndRunConfig hr;
  hr.steps = cfg.hr_steps;

  std::vector<Vector> estimates;
  estimates.reserve(twin.obs.size());
  for (size_t k = 0; k < twin.obs.size(); ++k) {
    for (Index i = 0; i < ens.size(); ++i) ens.members.col(i) = model_step(cfg.scenario, ens.members.col(i));
    const Vector& y = twin.obs[k];
    switch (kind) {
      case FilterKind::nofilter:
        break;
      case FilterKind::enkf:
        ens = enkf_step(ens, model, y, base);
        break;
      case FilterKind::bpf:
      case FilterKind::bayes_reference:
        ens = bpf_step(ens, model, y, base, rng);
        break;
      case FilterKind::engmf:
        ens = engmf_step(ens, model, y, base, rng);
        break;
      case FilterKind::bcpf:
      case FilterKind::enkcpf:
      case FilterKind::encpf: {
        PolytopeMixture mix = cube_kde(ens, kde);
        if (kind == FilterKind::bcpf) {
          mix = bcpf_update(mix, model, y);
        } else if (kind == FilterKind::enkcpf) {
          mix = enkcpf_update(mix, model, y);
        } else {
          mix = encpf_update(mix, uniform_model, y, cfg.encpf_budget, rng);
        }
        apply_defensive_factor(mix, cfg.defensive);
        ens = mixture_resample(mix, ens.size(), hr, rng);
        break;
      }
    }
    Vector mean = ensemble_mean(ens.members);
    if (!mean.allFinite()) throw Error(Errc::non_finite, "ensemble mean is not finite");
    estimates.push_back(std::move(mean));
  }
  return estimates;
}

struct Task {
  FilterKind filter;
  Index N;      // 0 for the Bayes reference
  int rep;
};

struct TaskOutcome {
  double rmse = kNaN;
  double seconds = 0.0;
};

}  // namespace

std::string to_string(Scenario s) { return s == Scenario::ikeda ? "ikeda" : "l96"; }

std::string to_string(FilterKind f) {
  for (const auto& [kind, name] : filter_names())
    if (kind == f) return name;
  return "unknown";
}

Scenario parse_scenario(const std::string& name) {
  if (name == "ikeda") return Scenario::ikeda;
  if (name == "l96") return Scenario::l96;
  throw Error(Errc::invalid_argument, "unknown scenario: " + name);
}

FilterKind parse_filter(const std::string& name) {
  for (const auto& [kind, n] : filter_names())
    if (name == n) return kind;
  if (name == "bayes") return FilterKind::bayes_reference;
  throw Error(Errc::invalid_argument, "unknown filter: " + name);
}

ExperimentConfig default_config(Scenario s) {
  ExperimentConfig cfg;
  cfg.scenario = s;
  if (s == Scenario::ikeda) {
    cfg.filters = {FilterKind::engmf, FilterKind::enkf, FilterKind::bcpf, FilterKind::bpf,
                   FilterKind::enkcpf, FilterKind::nofilter};
    cfg.ensemble_sizes = {25, 50, 100, 250, 500, 1000, 2500};
    cfg.steps = 550;
    cfg.discard = 50;
    cfg.process_noise_var = 1e-8;
  } else {
    cfg.filters = {FilterKind::engmf, FilterKind::enkf, FilterKind::enkcpf};
    cfg.ensemble_sizes = {25, 50, 75, 100, 125, 150, 175, 200, 225, 250};
    cfg.steps = 1100;
    cfg.discard = 100;
    cfg.localization_radius = 3.0;
  }
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  require(!cfg.filters.empty(), Errc::invalid_argument, "no filters selected");
  require(!cfg.ensemble_sizes.empty(), Errc::invalid_argument, "no ensemble sizes given");
  for (Index N : cfg.ensemble_sizes) require(N >= 2, Errc::invalid_argument, "ensemble sizes must be >= 2");
  require(cfg.steps >= 1, Errc::invalid_argument, "steps must be positive");
  require(cfg.discard >= 0 && cfg.discard < cfg.steps, Errc::invalid_argument,
          "discard must be nonnegative and below steps");
  require(cfg.mc_reps >= 1, Errc::invalid_argument, "mc_reps must be at least 1");
  require(cfg.inflation >= 1.0, Errc::invalid_argument, "inflation must be at least 1");
  require(!cfg.localization_radius || *cfg.localization_radius > 0.0, Errc::invalid_argument,
          "localization radius must be positive");
  require(cfg.defensive >= 0.0 && cfg.defensive <= 1.0, Errc::invalid_argument,
          "defensive factor must lie in [0, 1]");
  require(!cfg.process_noise_var || *cfg.process_noise_var >= 0.0, Errc::invalid_argument,
          "process noise variance must be nonnegative");
  require(cfg.hr_steps >= 1, Errc::invalid_argument, "hr_steps must be at least 1");
  require(cfg.encpf_budget >= 1, Errc::invalid_argument, "encpf_budget must be positive");
  require(cfg.bayes_particles >= 2, Errc::invalid_argument, "bayes_particles must be >= 2");
  require(noise_var(cfg) > 0.0, Errc::invalid_argument, "observation noise variance must be positive");
  require(cfg.workers >= 1, Errc::invalid_argument, "workers must be at least 1");
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  if (key == "scenario") {
    cfg.scenario = parse_scenario(value);
  } else if (key == "filters") {
    cfg.filters.clear();
    for (const auto& f : split_list(value)) cfg.filters.push_back(parse_filter(f));
  } else if (key == "ensemble_sizes") {
    cfg.ensemble_sizes.clear();
    for (const auto& s : split_list(value)) cfg.ensemble_sizes.push_back(parse_int(key, s));
  } else if (key == "steps") {
    cfg.steps = static_cast<int>(parse_int(key, value));
  } else if (key == "discard") {
    cfg.discard = static_cast<int>(parse_int(key, value));
  } else if (key == "mc_reps") {
    cfg.mc_reps = static_cast<int>(parse_int(key, value));
  } else if (key == "seed") {
    try {
      cfg.seed = std::stoull(value);
    } catch (const std::exception&) {
      throw Error(Errc::invalid_argument, "setting 'seed': not an unsigned integer: " + value);
    }
  } else if (key == "inflation") {
    cfg.inflation = parse_double(key, value);
  } else if (key == "loc_radius") {
    cfg.localization_radius = parse_optional(key, value);
  } else if (key == "defensive") {
    cfg.defensive = parse_double(key, value);
  } else if (key == "process_noise_var") {
    cfg.process_noise_var = parse_optional(key, value);
  } else if (key == "enkf_gain") {
    if (value == "statistical") {
      cfg.enkf_gain = EnkfGainMode::statistical;
    } else if (value == "linearized") {
      cfg.enkf_gain = EnkfGainMode::linearized;
    } else {
      throw Error(Errc::invalid_argument, "setting 'enkf_gain': expected statistical or linearized");
    }
  } else if (key == "hr_steps") {
    cfg.hr_steps = static_cast<int>(parse_int(key, value));
  } else if (key == "encpf_budget") {
    cfg.encpf_budget = parse_int(key, value);
  } else if (key == "bayes_particles") {
    cfg.bayes_particles = parse_int(key, value);
  } else if (key == "obs_noise_var") {
    cfg.obs_noise_var = parse_optional(key, value);
  } else if (key == "workers") {
    cfg.workers = static_cast<int>(parse_int(key, value));
  } else {
    throw Error(Errc::invalid_argument, "unknown setting: " + key);
  }
}

void load_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open config file: " + path);
  std::vector<std::pair<std::string, std::string>> settings;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(Errc::invalid_argument, path + ":" + std::to_string(lineno) + ": expected key=value");
    settings.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  // A scenario line selects that scenario's defaults before anything else.
  for (const auto& [key, value] : settings)
    if (key == "scenario") cfg = default_config(parse_scenario(value));
  for (const auto& [key, value] : settings) apply_setting(cfg, key, value);
}

TwinData generate_truth_and_obs(Scenario s, int steps, double noise_var, RngStream& rng) {
  require(steps >= 1, Errc::invalid_argument, "generate_truth_and_obs: steps must be positive");
  require(noise_var >= 0.0, Errc::invalid_argument, "generate_truth_and_obs: negative noise variance");
  TwinData twin;
  Vector x;
  if (s == Scenario::ikeda) {
    x = ikeda_attractor_point(rng);
  } else {
    const L96Params p;
    x = Vector::Constant(p.n, p.F) + 1e-2 * rng.normal_vector(p.n);
    for (int k = 0; k < 1000; ++k) x = l96_step(x, p);
  }
  twin.initial = x;
  const MeasurementModel model = scenario_model(s, std::max(noise_var, 1.0));
  const double sd = std::sqrt(noise_var);
  for (int k = 0; k < steps; ++k) {
    x = model_step(s, x);
    twin.truth.push_back(x);
    twin.obs.push_back(model.h(x) + sd * rng.normal_vector(model.meas_dim));
  }
  return twin;
}

double spatio_temporal_rmse(const std::vector<Vector>& truth, const std::vector<Vector>& estimates,
                            int discard) {
  require(truth.size() == estimates.size(), Errc::dimension_mismatch, "rmse: length mismatch");
  require(discard >= 0 && static_cast<size_t>(discard) < truth.size(), Errc::invalid_argument,
          "rmse: discard must leave at least one step");
  double total = 0.0;
  double count = 0.0;
  for (size_t k = static_cast<size_t>(discard); k < truth.size(); ++k) {
    require(truth[k].size() == estimates[k].size(), Errc::dimension_mismatch, "rmse: state size mismatch");
    total += (truth[k] - estimates[k]).squaredNorm();
    count += static_cast<double>(truth[k].size());
  }
  return std::sqrt(total / count);
}

const RunEntry* RunResult::find(FilterKind f, Index N) const {
  if (f == FilterKind::bayes_reference) N = 0;
  for (const auto& e : entries)
    if (e.filter == f && e.N == N) return &e;
  return nullptr;
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  std::vector<FilterKind> filters;
  for (const auto& [kind, name] : csv_columns())
    if (std::find(cfg.filters.begin(), cfg.filters.end(), kind) != cfg.filters.end()) filters.push_back(kind);
  std::vector<Index> sizes = cfg.ensemble_sizes;
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());

  std::vector<Task> tasks;
  for (FilterKind f : filters) {
    if (f == FilterKind::bayes_reference) {
      for (int r = 0; r < cfg.mc_reps; ++r) tasks.push_back({f, 0, r});
      continue;
    }
    for (Index N : sizes)
      for (int r = 0; r < cfg.mc_reps; ++r) tasks.push_back({f, N, r});
  }

  std::vector<TaskOutcome> outcomes(tasks.size());
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    while (true) {
      const size_t t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      const Task& task = tasks[t];
      const auto start = std::chrono::steady_clock::now();
      try {
        RngStream truth_rng = task_stream(cfg.seed, kTruthTag, static_cast<std::uint64_t>(task.rep));
        const TwinData twin = generate_truth_and_obs(cfg.scenario, cfg.steps, noise_var(cfg), truth_rng);
        const Index N = task.filter == FilterKind::bayes_reference ? cfg.bayes_particles : task.N;
        RngStream ens_rng = task_stream(cfg.seed, kEnsembleTag, static_cast<std::uint64_t>(task.rep),
                                        static_cast<std::uint64_t>(N));
        Ensemble ens = initial_ensemble(cfg.scenario, twin.initial, N, ens_rng);
        RngStream filter_rng =
            task_stream(cfg.seed, kFilterTag ^ (static_cast<std::uint64_t>(task.filter) << 8),
                        static_cast<std::uint64_t>(task.rep), static_cast<std::uint64_t>(N));
        const std::vector<Vector> est = run_filter(task.filter, cfg, twin, std::move(ens), filter_rng);
        outcomes[t].rmse = spatio_temporal_rmse(twin.truth, est, cfg.discard);
      } catch (const Error&) {
        outcomes[t].rmse = kNaN;  // diverged; counted below
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
      outcomes[t].seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  };
  const int nthreads = std::min<int>(cfg.workers, static_cast<int>(tasks.size()));
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nthreads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  // Reduce in task order so the result is independent of scheduling.
  RunResult result;
  result.scenario = cfg.scenario;
  result.ensemble_sizes = sizes;
  result.filters = filters;
  std::map<std::pair<int, Index>, std::vector<size_t>> groups;
  std::vector<std::pair<int, Index>> order;
  for (size_t t = 0; t < tasks.size(); ++t) {
    const auto key = std::make_pair(static_cast<int>(tasks[t].filter), tasks[t].N);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(t);
  }
  for (const auto& key : order) {
    RunEntry e;
    e.filter = static_cast<FilterKind>(key.first);
    e.N = key.second;
    std::vector<double> ok;
    for (size_t t : groups[key]) {
      e.wall_seconds += outcomes[t].seconds;
      if (std::isfinite(outcomes[t].rmse)) {
        ok.push_back(outcomes[t].rmse);
      } else {
        ++e.reps_diverged;
      }
    }
    e.reps_ok = static_cast<int>(ok.size());
    if (ok.empty()) {
      e.mean_rmse = kNaN;
      e.std_error = kNaN;
    } else {
      double sum = 0.0;
      for (double v : ok) sum += v;
      e.mean_rmse = sum / static_cast<double>(ok.size());
      double ss = 0.0;
      for (double v : ok) ss += (v - e.mean_rmse) * (v - e.mean_rmse);
      e.std_error = ok.size() > 1
                        ? std::sqrt(ss / static_cast<double>(ok.size() - 1) / static_cast<double>(ok.size()))
                        : 0.0;
    }
    result.entries.push_back(e);
  }
  return result;
}

std::string format_csv(const RunResult& result) {
  std::vector<std::pair<FilterKind, const char*>> cols;
  for (const auto& col : csv_columns())
    if (std::find(result.filters.begin(), result.filters.end(), col.first) != result.filters.end())
      cols.push_back(col);
  std::string out = "N";
  for (const auto& col : cols) out += std::string(",") + col.second;
  out += "\n";
  char buf[64];
  for (Index N : result.ensemble_sizes) {
    out += std::to_string(N);
    for (const auto& col : cols) {
      const RunEntry* e = result.find(col.first, N);
      const double v = e ? e->mean_rmse : kNaN;
      if (std::isfinite(v)) {
        std::snprintf(buf, sizeof(buf), "%.6g", v);
        out += std::string(",") + buf;
      } else {
        out += ",nan";
      }
    }
    out += "\n";
  }
  return out;
}

void write_csv(const RunResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot open for writing: " + path);
  out << format_csv(result);
  if (!out) throw Error(Errc::io, "write failed: " + path);
}

RunResult read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open CSV: " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::io, "empty CSV: " + path);
  const std::vector<std::string> header = split_list(line);
  if (header.empty() || header[0] != "N") throw Error(Errc::io, "CSV header must start with N");
  RunResult result;
  std::vector<FilterKind> col_kind;
  for (size_t c = 1; c < header.size(); ++c) {
    bool found = false;
    for (const auto& [kind, name] : csv_columns()) {
      if (header[c] == name) {
        col_kind.push_back(kind);
        result.filters.push_back(kind);
        found = true;
      }
    }
    if (!found) throw Error(Errc::io, "unknown CSV column: " + header[c]);
  }
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_list(line);
    if (cells.size() != header.size()) throw Error(Errc::io, "CSV row has the wrong number of cells");
    const Index N = parse_int("N", cells[0]);
    result.ensemble_sizes.push_back(N);
    for (size_t c = 1; c < cells.size(); ++c) {
      const FilterKind kind = col_kind[c - 1];
      if (kind == FilterKind::bayes_reference && result.find(kind, 0)) continue;
      RunEntry e;
      e.filter = kind;
      e.N = kind == FilterKind::bayes_reference ? 0 : N;
      e.mean_rmse = cells[c] == "nan" ? kNaN : parse_double(header[c], cells[c]);
      e.std_error = kNaN;
      result.entries.push_back(e);
    }
  }
  return result;
}

}  // namespace polyfilt
