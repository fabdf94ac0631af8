#include "dde/bench.hpp"

#include "dde/error.hpp"
#include "dde/parallel.hpp"
#include "dde/rng.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace dde {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Json summary_json(const Summary& s) {
  Json j;
  j["mean"] = s.mean;
  if (s.count >= 2)
    j["sd"] = s.sd;
  else
    j["sd"] = nullptr;
  j["n"] = s.count;
  return j;
}

void append(std::string& out, double x) {
  if (std::isnan(x)) {
    out += "nan";
    return;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  out += buf;
}

}  // namespace

std::string_view to_string(InitKind kind) noexcept {
  return kind == InitKind::Random ? "random" : "spectral";
}

InitKind parse_init_kind(std::string_view name) {
  if (name == "spectral") return InitKind::Spectral;
  if (name == "random") return InitKind::Random;
  fail(ErrorCode::InvalidArgument, "unknown init '" + std::string(name) + "'");
}

void validate(const ExperimentSpec& spec) {
  require(spec.reps >= 1, ErrorCode::Validation, "reps must be at least 1");
  require(!spec.N.empty(), ErrorCode::Validation, "N list is empty");
  for (Index n : spec.N) require(n >= 2, ErrorCode::Validation, "every N must be at least 2");
  require(!spec.K.empty(), ErrorCode::Validation, "K list is empty");
  require(spec.fit_model || spec.select_k, ErrorCode::Validation, "nothing to run: enable fit_model or select_k");
  spec.family.check_width(spec.J);
  try {
    make_benchmark_params(spec.kind, spec.J, spec.K, spec.family);
  } catch (const Error& e) {
    fail(ErrorCode::Validation, e.what());
  }
  fit_config_from_json(spec.fit, spec.N.front(), static_cast<Index>(spec.K.size()));
}

ExperimentSpec experiment_from_json(const Json& j) {
  require(j.is_object(), ErrorCode::Validation, "experiment spec must be a JSON object");
  static const char* known[] = {"schema", "family", "J", "K", "kind", "N", "reps", "seed",
                                "init", "fit", "fit_model", "select_k"};
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    require(ok, ErrorCode::Validation, "unknown experiment key '" + key + "'");
  }
  ExperimentSpec s;
  try {
    if (j.contains("family")) s.family = family_from_json(j.at("family"));
    if (j.contains("K")) s.K = j.at("K").get<std::vector<Index>>();
    s.J = j.contains("J") ? j.at("J").get<Index>() : 3 * s.K.front();
    if (j.contains("kind")) s.kind = parse_benchmark_kind(j.at("kind").get<std::string>());
    if (j.contains("N")) {
      if (j.at("N").is_array())
        s.N = j.at("N").get<std::vector<Index>>();
      else
        s.N = {j.at("N").get<Index>()};
    }
    if (j.contains("reps")) s.reps = j.at("reps").get<Index>();
    if (j.contains("seed")) s.base_seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("init")) s.init = parse_init_kind(j.at("init").get<std::string>());
    if (j.contains("fit")) s.fit = j.at("fit");
    if (j.contains("fit_model")) s.fit_model = j.at("fit_model").get<bool>();
    if (j.contains("select_k")) s.select_k = j.at("select_k").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Validation, std::string("malformed experiment spec: ") + e.what());
  } catch (const Error& e) {
    fail(ErrorCode::Validation, e.what());
  }
  validate(s);
  return s;
}

Json experiment_to_json(const ExperimentSpec& s) {
  Json j;
  j["schema"] = kSchema;
  j["family"] = family_to_json(s.family);
  j["J"] = s.J;
  j["K"] = s.K;
  j["kind"] = s.kind == BenchmarkKind::Strict ? "strict" : "generic";
  j["N"] = s.N;
  j["reps"] = s.reps;
  j["seed"] = s.base_seed;
  j["init"] = std::string(to_string(s.init));
  j["fit"] = s.fit;
  j["fit_model"] = s.fit_model;
  j["select_k"] = s.select_k;
  return j;
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  double sum = 0.0;
  for (double v : values)
    if (!std::isnan(v)) {
      sum += v;
      ++s.count;
    }
  if (s.count == 0) {
    s.mean = kNaN;
    s.sd = kNaN;
    return s;
  }
  s.mean = sum / static_cast<double>(s.count);
  if (s.count < 2) {
    s.sd = kNaN;
    return s;
  }
  double ss = 0.0;
  for (double v : values)
    if (!std::isnan(v)) ss += (v - s.mean) * (v - s.mean);
  s.sd = std::sqrt(ss / static_cast<double>(s.count - 1));
  return s;
}

RepResult run_replication(const ExperimentSpec& spec, const DdeModel& truth, Index N, Index rep) {
  const Index D = static_cast<Index>(spec.K.size());
  RepResult r;
  r.N = N;
  r.rep = rep;
  r.seed = spec.base_seed + static_cast<std::uint64_t>(rep);
  r.accuracy.assign(static_cast<std::size_t>(D), kNaN);
  r.accuracy_overall = kNaN;
  r.rmse = kNaN;
  r.seconds = kNaN;
  const auto start = std::chrono::steady_clock::now();
  try {
    const Sample s = sample(truth, N, r.seed);
    if (spec.select_k) {
      r.K_selected = select_latent_dims(s.data, D, spec.family).K;
    }
    if (spec.fit_model) {
      FitConfig cfg = fit_config_from_json(spec.fit, N, D);
      if (!spec.fit.contains("seed")) cfg.seed = derive_seed(r.seed, 1);
      const SpectralInit init = spec.init == InitKind::Random
                                    ? random_init(s.data, spec.K, spec.family, derive_seed(r.seed, 2))
                                    : spectral_init(s.data, spec.K, spec.family);
      const FitReport report = fit(s.data, cfg, init);
      const GraphSet Gs = graphs_from_coefficients(truth);
      const Alignment a = align(report.model_hat, truth);
      r.accuracy = accuracy_G(report.graphs_hat, Gs, a);
      r.accuracy_overall = accuracy_G_overall(report.graphs_hat, Gs, a);
      r.rmse = rmse_theta(report.model_hat, truth, a);
      r.iters = report.iters;
      r.converged = report.converged;
    }
    r.ok = true;
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = e.what();
    r.accuracy.assign(static_cast<std::size_t>(D), kNaN);
    r.accuracy_overall = kNaN;
    r.rmse = kNaN;
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

BenchResult run_benchmark(const ExperimentSpec& spec) {
  validate(spec);
  const DdeModel truth = make_benchmark_params(spec.kind, spec.J, spec.K, spec.family);
  const Index D = static_cast<Index>(spec.K.size());
  BenchResult out;
  out.spec = spec;
  const Index per_n = spec.reps;
  const Index total = per_n * static_cast<Index>(spec.N.size());
  out.runs.resize(static_cast<std::size_t>(total));
  for_each_chunk(total, 1, [&](Index, Index begin, Index end) {
    for (Index t = begin; t < end; ++t) {
      const Index N = spec.N[static_cast<std::size_t>(t / per_n)];
      out.runs[static_cast<std::size_t>(t)] = run_replication(spec, truth, N, t % per_n);
    }
  });
  for (std::size_t n = 0; n < spec.N.size(); ++n) {
    SettingResult s;
    s.N = spec.N[n];
    s.reps = per_n;
    std::vector<std::vector<double>> acc(static_cast<std::size_t>(D));
    std::vector<double> overall, rmse, secs, iters;
    std::vector<Index> hits(static_cast<std::size_t>(D), 0);
    for (Index r = 0; r < per_n; ++r) {
      const RepResult& run = out.runs[n * static_cast<std::size_t>(per_n) + static_cast<std::size_t>(r)];
      if (!run.ok) ++s.failures;
      for (Index d = 0; d < D; ++d) acc[static_cast<std::size_t>(d)].push_back(run.accuracy[static_cast<std::size_t>(d)]);
      overall.push_back(run.accuracy_overall);
      rmse.push_back(run.rmse);
      secs.push_back(run.seconds);
      iters.push_back(run.ok && spec.fit_model ? static_cast<double>(run.iters) : kNaN);
      if (run.ok && spec.select_k)
        for (Index d = 0; d < D; ++d)
          if (run.K_selected[static_cast<std::size_t>(d)] == spec.K[static_cast<std::size_t>(d)])
            ++hits[static_cast<std::size_t>(d)];
    }
    for (const auto& a : acc) s.accuracy.push_back(summarize(a));
    s.accuracy_overall = summarize(overall);
    s.rmse = summarize(rmse);
    s.seconds = summarize(secs);
    s.iters = summarize(iters);
    if (spec.select_k)
      for (Index h : hits) s.selection_rate.push_back(static_cast<double>(h) / static_cast<double>(per_n));
    out.settings.push_back(std::move(s));
  }
  return out;
}

Json bench_to_json(const BenchResult& result, bool include_runs) {
  Json j;
  j["schema"] = kSchema;
  j["spec"] = experiment_to_json(result.spec);
  Json settings = Json::array();
  for (const auto& s : result.settings) {
    Json js;
    js["N"] = s.N;
    js["reps"] = s.reps;
    js["failures"] = s.failures;
    Json acc = Json::array();
    for (const auto& a : s.accuracy) acc.push_back(summary_json(a));
    js["accuracy_G"] = acc;
    js["accuracy_overall"] = summary_json(s.accuracy_overall);
    js["rmse"] = summary_json(s.rmse);
    js["iters"] = summary_json(s.iters);
    js["seconds"] = summary_json(s.seconds);
    if (!s.selection_rate.empty()) js["selection_rate"] = s.selection_rate;
    settings.push_back(js);
  }
  j["settings"] = settings;
  if (include_runs) {
    Json runs = Json::array();
    for (const auto& r : result.runs) {
      Json jr;
      jr["N"] = r.N;
      jr["rep"] = r.rep;
      jr["seed"] = r.seed;
      jr["ok"] = r.ok;
      if (!r.ok) jr["error"] = r.error;
      jr["accuracy_G"] = r.accuracy;
      jr["accuracy_overall"] = r.accuracy_overall;
      jr["rmse"] = r.rmse;
      jr["iters"] = r.iters;
      jr["converged"] = r.converged;
      jr["seconds"] = r.seconds;
      if (!r.K_selected.empty()) jr["K_selected"] = r.K_selected;
      runs.push_back(jr);
    }
    j["runs"] = runs;
  }
  return j;
}

std::string bench_curves_csv(const BenchResult& result) {
  const std::size_t D = result.spec.K.size();
  std::string out = "N,reps,failures";
  for (std::size_t d = 1; d <= D; ++d)
    out += ",acc_G" + std::to_string(d) + "_mean,acc_G" + std::to_string(d) + "_sd";
  out += ",acc_mean,acc_sd,rmse_mean,rmse_sd,seconds_mean";
  if (result.spec.select_k)
    for (std::size_t d = 1; d <= D; ++d) out += ",select_K" + std::to_string(d);
  out += "\n";
  for (const auto& s : result.settings) {
    out += std::to_string(s.N) + "," + std::to_string(s.reps) + "," + std::to_string(s.failures);
    for (const auto& a : s.accuracy) {
      out += ",";
      append(out, a.mean);
      out += ",";
      append(out, a.sd);
    }
    for (const Summary* x : {&s.accuracy_overall, &s.rmse}) {
      out += ",";
      append(out, x->mean);
      out += ",";
      append(out, x->sd);
    }
    out += ",";
    append(out, s.seconds.mean);
    for (double rate : s.selection_rate) {
      out += ",";
      append(out, rate);
    }
    out += "\n";
  }
  return out;
}

}  // namespace dde
