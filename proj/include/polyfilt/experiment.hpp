#pragma once

#include "polyfilt/baselines.hpp"
#include "polyfilt/sampling.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace polyfilt {

enum class Scenario { ikeda, l96 };

enum class FilterKind { engmf, enkf, bcpf, bpf, enkcpf, encpf, nofilter, bayes_reference };

std::string to_string(Scenario s);
std::string to_string(FilterKind f);
/// Throws Errc::invalid_argument for unknown names.
Scenario parse_scenario(const std::string& name);
FilterKind parse_filter(const std::string& name);

struct ExperimentConfig {
  Scenario scenario = Scenario::ikeda;
  std::vector<FilterKind> filters;
  std::vector<Index> ensemble_sizes;
  int steps = 550;
  int discard = 50;
  int mc_reps = 1;
  std::uint64_t seed = 1;

  double inflation = 1.001;              ///< EnKF only
  std::optional<double> localization_radius;
  double defensive = 1e-4;               ///< every filter except the EnKF
  std::optional<double> process_noise_var;  ///< BPF and Bayes reference, times I
  EnkfGainMode enkf_gain = EnkfGainMode::statistical;
  int hr_steps = 25;
  Index encpf_budget = 10000;
  Index bayes_particles = 100000;
  /// Observation noise variance; defaults to the scenario's value (1).
  std::optional<double> obs_noise_var;
  int workers = 1;
};

/// Reference settings for a scenario: Ikeda 550/50 with BPF process noise 1e-8,
/// L96 1100/100 with localization radius 3.
ExperimentConfig default_config(Scenario s);

void validate(const ExperimentConfig& cfg);

/// Applies one `key=value` setting (same keys as the config file).
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Reads a flat key=value file; blank lines and '#' comments are skipped.
void load_config_file(ExperimentConfig& cfg, const std::string& path);

struct TwinData {
  Vector initial;             ///< x_0; the L96 ensemble is drawn around it
  std::vector<Vector> truth;  ///< x_1 .. x_K
  std::vector<Vector> obs;    ///< y_1 .. y_K
};

/// Truth by the exact model and y_k = h(x_k) + N(0, noise_var I). Ikeda starts
/// on the chaotic attractor; L96 starts near F 1 and is spun up 1000 steps.
TwinData generate_truth_and_obs(Scenario s, int steps, double noise_var, RngStream& rng);

/// sqrt(mean over retained steps and coordinates of squared error); steps
/// with index < discard are skipped.
double spatio_temporal_rmse(const std::vector<Vector>& truth, const std::vector<Vector>& estimates,
                            int discard);

struct RunEntry {
  FilterKind filter = FilterKind::nofilter;
  Index N = 0;
  double mean_rmse = 0.0;   ///< NaN when every replicate diverged
  double std_error = 0.0;
  int reps_ok = 0;
  int reps_diverged = 0;
  double wall_seconds = 0.0;
};

struct RunResult {
  Scenario scenario = Scenario::ikeda;
  std::vector<Index> ensemble_sizes;
  std::vector<FilterKind> filters;
  std::vector<RunEntry> entries;

  /// The Bayes reference is stored once, under N = 0.
  const RunEntry* find(FilterKind f, Index N) const;
};

/// Runs every (filter, N, replicate) task on cfg.workers threads. Replicate r
/// uses the same truth and observations for every filter; results do not
/// depend on the worker count.
RunResult run_experiment(const ExperimentConfig& cfg);

/// Columns N, rmseEnGMF, rmseEnKF, rmseBCPF, rmseBPF, rmseEnKCPF, rmseEnCPF,
/// rmseNoFilter, rmseBayes restricted to the filters that ran; 6 significant
/// digits, `nan` for missing or diverged entries.
std::string format_csv(const RunResult& result);
void write_csv(const RunResult& result, const std::string& path);
/// Parses a CSV produced by write_csv (mean RMSE only).
RunResult read_csv(const std::string& path);

}  // namespace polyfilt
