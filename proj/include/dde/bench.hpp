#pragma once

#include "dde/io.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dde {

enum class InitKind { Spectral, Random };
std::string_view to_string(InitKind kind) noexcept;
InitKind parse_init_kind(std::string_view name);

struct ExperimentSpec {
  ObservedFamily family = ObservedFamily::uniform(FamilyKind::Normal);
  Index J = 18;
  std::vector<Index> K{6, 2};
  BenchmarkKind kind = BenchmarkKind::Strict;
  std::vector<Index> N{2000};
  Index reps = 20;
  std::uint64_t base_seed = 1;
  InitKind init = InitKind::Spectral;
  Json fit = Json::object();          // options for fit_config_from_json
  bool fit_model = true;              // false: only the selection metric runs
  bool select_k = false;              // also run spectral-ratio K selection
};

/// Reads {family, J, K, kind, N, reps, seed, init, fit, fit_model, select_k}.
ExperimentSpec experiment_from_json(const Json& j);
Json experiment_to_json(const ExperimentSpec& spec);
void validate(const ExperimentSpec& spec);

struct RepResult {
  Index N = 0;
  Index rep = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<double> accuracy;  // per layer, NaN when the rep failed
  double accuracy_overall = 0.0;
  double rmse = 0.0;
  double seconds = 0.0;
  Index iters = 0;
  bool converged = false;
  std::vector<Index> K_selected;
};

struct Summary {
  double mean = 0.0;
  double sd = 0.0;  // NaN when fewer than two values
  Index count = 0;
};

Summary summarize(const std::vector<double>& values);

struct SettingResult {
  Index N = 0;
  Index reps = 0;
  Index failures = 0;
  std::vector<Summary> accuracy;  // per layer
  Summary accuracy_overall, rmse, seconds, iters;
  std::vector<double> selection_rate;  // per layer, when selection ran
};

struct BenchResult {
  ExperimentSpec spec;
  std::vector<SettingResult> settings;
  std::vector<RepResult> runs;
};

/// One replication: simulate, initialise, fit, align, score. Errors are
/// caught and recorded in the result.
RepResult run_replication(const ExperimentSpec& spec, const DdeModel& truth, Index N, Index rep);

/// Every (N, rep) pair; replications run in parallel, each one serial.
BenchResult run_benchmark(const ExperimentSpec& spec);

Json bench_to_json(const BenchResult& result, bool include_runs = true);
/// One line per N: N, reps, failures, acc mean/sd per layer, overall, rmse,
/// seconds, selection rates.
std::string bench_curves_csv(const BenchResult& result);

}  // namespace dde
