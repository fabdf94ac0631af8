#include "dde/dde.h"

#include "dde/bench.hpp"
#include "dde/error.hpp"
#include "dde/identifiability.hpp"
#include "dde/io.hpp"
#include "dde/parallel.hpp"
#include "dde/rng.hpp"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

struct dde_model {
  dde::DdeModel m;
};
struct dde_dataset {
  dde::Dataset d;
};
struct dde_latents {
  dde::LatentAssignment a;
};
struct dde_fit_report {
  dde::FitReport r;
};

namespace {

thread_local std::string t_error;

int status_of(dde::ErrorCode code) {
  switch (code) {
    case dde::ErrorCode::Ok: return DDE_OK;
    case dde::ErrorCode::InvalidArgument: return DDE_E_INVALID_ARGUMENT;
    case dde::ErrorCode::Shape: return DDE_E_SHAPE;
    case dde::ErrorCode::Validation: return DDE_E_VALIDATION;
    case dde::ErrorCode::Capacity: return DDE_E_CAPACITY;
    case dde::ErrorCode::Numeric: return DDE_E_NUMERIC;
    case dde::ErrorCode::Io: return DDE_E_IO;
    case dde::ErrorCode::Unsupported: return DDE_E_UNSUPPORTED;
    case dde::ErrorCode::Internal: return DDE_E_INTERNAL;
  }
  return DDE_E_INTERNAL;
}

template <class F>
int guarded(F&& body) {
  try {
    body();
    t_error.clear();
    return DDE_OK;
  } catch (const dde::Error& e) {
    t_error = e.what();
    return status_of(e.code());
  } catch (const nlohmann::json::exception& e) {
    t_error = e.what();
    return DDE_E_VALIDATION;
  } catch (const std::bad_alloc&) {
    t_error = "out of memory";
    return DDE_E_CAPACITY;
  } catch (const std::exception& e) {
    t_error = e.what();
    return DDE_E_INTERNAL;
  } catch (...) {
    t_error = "unknown failure";
    return DDE_E_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) dde::fail(dde::ErrorCode::InvalidArgument, std::string(what) + " is null");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::vector<dde::Index> dims(const size_t* K, size_t depth) {
  if (depth == 0) dde::fail(dde::ErrorCode::InvalidArgument, "at least one latent layer is required");
  need(K, "K");
  std::vector<dde::Index> out;
  for (size_t i = 0; i < depth; ++i) out.push_back(static_cast<dde::Index>(K[i]));
  return out;
}

dde::ObservedFamily family_arg(const char* family) {
  need(family, "family");
  return dde::parse_family(family);
}

dde::Tristate worse(dde::Tristate a, dde::Tristate b) {
  if (a == dde::Tristate::No || b == dde::Tristate::No) return dde::Tristate::No;
  if (a == dde::Tristate::Unknown || b == dde::Tristate::Unknown) return dde::Tristate::Unknown;
  return dde::Tristate::Yes;
}

}  // namespace

extern "C" {

const char* dde_last_error(void) { return t_error.c_str(); }

const char* dde_status_name(int status) {
  switch (status) {
    case DDE_OK: return "ok";
    case DDE_E_INVALID_ARGUMENT: return "invalid argument";
    case DDE_E_SHAPE: return "shape mismatch";
    case DDE_E_VALIDATION: return "validation error";
    case DDE_E_CAPACITY: return "capacity exceeded";
    case DDE_E_NUMERIC: return "numeric failure";
    case DDE_E_IO: return "i/o error";
    case DDE_E_UNSUPPORTED: return "unsupported";
    case DDE_E_INTERNAL: return "internal error";
    default: return "unknown status";
  }
}

const char* dde_version(void) { return "0.1.0"; }

void dde_string_free(char* s) { std::free(s); }

int dde_set_threads(int threads) {
  return guarded([&] {
    if (threads < 0) dde::fail(dde::ErrorCode::InvalidArgument, "thread count must be nonnegative");
    dde::set_default_threads(threads);
  });
}

int dde_model_load(const char* path, dde_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new dde_model{dde::load_model(path)};
  });
}

int dde_model_save(const dde_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    dde::save_model(model->m, path);
  });
}

int dde_model_from_json(const char* json, dde_model** out) {
  return guarded([&] {
    need(json, "json");
    need(out, "out");
    dde::Json j;
    try {
      j = dde::Json::parse(json);
    } catch (const nlohmann::json::parse_error& e) {
      dde::fail(dde::ErrorCode::Validation, e.what());
    }
    *out = new dde_model{dde::model_from_json(j)};
  });
}

int dde_model_to_json(const dde_model* model, char** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = dup(dde::model_to_json(model->m).dump(2));
  });
}

int dde_model_benchmark(const char* kind, size_t J, const size_t* K, size_t depth,
                        const char* family, dde_model** out) {
  return guarded([&] {
    need(kind, "kind");
    need(out, "out");
    *out = new dde_model{dde::make_benchmark_params(dde::parse_benchmark_kind(kind),
                                                    static_cast<dde::Index>(J), dims(K, depth),
                                                    family_arg(family))};
  });
}

size_t dde_model_depth(const dde_model* model) {
  return model ? static_cast<size_t>(model->m.depth()) : 0;
}

size_t dde_model_layer_size(const dde_model* model, size_t layer) {
  if (!model || layer > static_cast<size_t>(model->m.depth())) return 0;
  return static_cast<size_t>(model->m.layer_size(static_cast<dde::Index>(layer)));
}

void dde_model_free(dde_model* model) { delete model; }

int dde_dataset_read_csv(const char* path, dde_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new dde_dataset{dde::Dataset{dde::read_csv(path)}};
  });
}

int dde_dataset_write_csv(const dde_dataset* data, const char* path) {
  return guarded([&] {
    need(data, "data");
    need(path, "path");
    dde::write_csv(path, data->d.Y);
  });
}

int dde_dataset_from_buffer(const double* values, size_t rows, size_t cols, dde_dataset** out) {
  return guarded([&] {
    need(values, "values");
    need(out, "out");
    if (rows == 0 || cols == 0) dde::fail(dde::ErrorCode::Shape, "dataset must be non-empty");
    dde::Dataset d;
    d.Y = Eigen::Map<const dde::RowMatrix>(values, static_cast<dde::Index>(rows),
                                           static_cast<dde::Index>(cols));
    *out = new dde_dataset{std::move(d)};
  });
}

size_t dde_dataset_rows(const dde_dataset* data) { return data ? static_cast<size_t>(data->d.rows()) : 0; }
size_t dde_dataset_cols(const dde_dataset* data) { return data ? static_cast<size_t>(data->d.cols()) : 0; }
const double* dde_dataset_values(const dde_dataset* data) { return data ? data->d.Y.data() : nullptr; }
void dde_dataset_free(dde_dataset* data) { delete data; }

size_t dde_latents_depth(const dde_latents* latents) {
  return latents ? static_cast<size_t>(latents->a.depth()) : 0;
}

int dde_latents_write_csv(const dde_latents* latents, size_t layer, const char* path) {
  return guarded([&] {
    need(latents, "latents");
    need(path, "path");
    const auto& layers = latents->a.layers;
    if (layer > layers.size()) dde::fail(dde::ErrorCode::InvalidArgument, "latent layer out of range");
    if (layer > 0) {
      dde::write_csv(path, layers[layer - 1]);
      return;
    }
    dde::Index width = 0;
    for (const auto& l : layers) width += l.cols();
    dde::BinaryMatrix all(layers.empty() ? 0 : layers[0].rows(), width);
    dde::Index at = 0;
    for (const auto& l : layers) {
      all.middleCols(at, l.cols()) = l;
      at += l.cols();
    }
    dde::write_csv(path, all);
  });
}

void dde_latents_free(dde_latents* latents) { delete latents; }

int dde_sample(const dde_model* model, size_t N, uint64_t seed, dde_dataset** data,
               dde_latents** latents) {
  return guarded([&] {
    need(model, "model");
    if (N == 0) dde::fail(dde::ErrorCode::InvalidArgument, "N must be positive");
    dde::Sample s = dde::sample(model->m, static_cast<dde::Index>(N), seed);
    if (data) *data = new dde_dataset{std::move(s.data)};
    if (latents) *latents = new dde_latents{std::move(s.latents)};
  });
}

int dde_spectral_init(const dde_dataset* data, const char* family, const size_t* K, size_t depth,
                      dde_model** model, dde_latents** latents, char** warnings_json) {
  return guarded([&] {
    need(data, "data");
    dde::SpectralInit init = dde::spectral_init(data->d, dims(K, depth), family_arg(family));
    if (warnings_json) *warnings_json = dup(dde::Json(init.warnings).dump());
    if (model) *model = new dde_model{std::move(init.model0)};
    if (latents) *latents = new dde_latents{std::move(init.A0)};
  });
}

int dde_select_k(const dde_dataset* data, const char* family, size_t depth, const size_t* grid,
                 size_t grid_len, char** out_json) {
  return guarded([&] {
    need(data, "data");
    need(out_json, "out_json");
    if (depth == 0) dde::fail(dde::ErrorCode::InvalidArgument, "depth must be positive");
    std::vector<dde::Index> override_grid;
    if (grid_len > 0) {
      need(grid, "grid");
      for (size_t i = 0; i < grid_len; ++i) override_grid.push_back(static_cast<dde::Index>(grid[i]));
    }
    const auto sel = dde::select_latent_dims(data->d, static_cast<dde::Index>(depth),
                                             family_arg(family), {}, override_grid);
    *out_json = dup(dde::selection_to_json(sel).dump(2));
  });
}

int dde_fit(const dde_dataset* data, const char* family, const size_t* K, size_t depth,
            const dde_model* start, const char* options_json, dde_fit_report** out) {
  return guarded([&] {
    need(data, "data");
    need(out, "out");
    const dde::ObservedFamily fam = family_arg(family);
    const std::vector<dde::Index> Ks = dims(K, depth);
    dde::Json opts = dde::Json::object();
    if (options_json && *options_json) {
      try {
        opts = dde::Json::parse(options_json);
      } catch (const nlohmann::json::parse_error& e) {
        dde::fail(dde::ErrorCode::InvalidArgument, std::string("fit options: ") + e.what());
      }
    }
    const dde::FitConfig cfg =
        dde::fit_config_from_json(opts, data->d.rows(), static_cast<dde::Index>(Ks.size()));
    dde::validate_dataset(data->d, fam);
    dde::SpectralInit init;
    if (start) {
      if (start->m.K != Ks || start->m.J != data->d.cols() || !(start->m.family == fam))
        dde::fail(dde::ErrorCode::Validation, "start model does not match the data, family or dims");
      init.model0 = start->m;
      init.G0 = dde::graphs_from_coefficients(start->m);
      init.A0 = dde::posterior_latents(start->m, data->d, dde::kDefaultEnumerationCap, 200, cfg.seed).A;
    } else {
      const std::string how = opts.contains("init") ? opts.at("init").get<std::string>() : "spectral";
      if (dde::parse_init_kind(how) == dde::InitKind::Random)
        init = dde::random_init(data->d, Ks, fam, dde::derive_seed(cfg.seed, 2));
      else
        init = dde::spectral_init(data->d, Ks, fam);
    }
    *out = new dde_fit_report{dde::fit(data->d, cfg, init)};
  });
}

int dde_fit_report_model(const dde_fit_report* report, dde_model** out) {
  return guarded([&] {
    need(report, "report");
    need(out, "out");
    *out = new dde_model{report->r.model_hat};
  });
}

int dde_fit_report_to_json(const dde_fit_report* report, char** out) {
  return guarded([&] {
    need(report, "report");
    need(out, "out");
    *out = dup(dde::report_to_json(report->r).dump(2));
  });
}

size_t dde_fit_report_iterations(const dde_fit_report* report) {
  return report ? static_cast<size_t>(report->r.iters) : 0;
}

int dde_fit_report_converged(const dde_fit_report* report) {
  return report && report->r.converged ? 1 : 0;
}

void dde_fit_report_free(dde_fit_report* report) { delete report; }

int dde_check_id(const dde_model* model, const char* condition, char** out_json, int* verdict) {
  return guarded([&] {
    need(model, "model");
    need(condition, "condition");
    const std::string cond = condition;
    const dde::DdeModel& m = model->m;
    const dde::GraphSet G = dde::graphs_from_coefficients(m, dde::kFileGraphTolerance);
    std::vector<dde::ConditionReport> reports;
    if (cond == "assumptions") {
      reports = dde::validate_model_assumptions(m);
    } else if (cond == "A" || cond == "A3" || cond == "B" || cond == "C") {
      for (dde::Index d = 1; d <= m.depth(); ++d) {
        const dde::BinaryMatrix& g = G.layers[static_cast<std::size_t>(d - 1)];
        dde::ConditionReport r;
        if (cond == "A") {
          r = dde::check_condition_A(g, 2);
        } else if (cond == "A3") {
          r = dde::check_condition_A(g, 3);
        } else if (cond == "B") {
          const dde::ConditionReport a = dde::check_condition_A(g, 2);
          std::vector<dde::Index> pure;
          for (const auto& rows : a.pure_children)
            for (std::size_t i = 0; i < rows.size() && i < 2; ++i) pure.push_back(rows[i]);
          r = dde::check_condition_B(m.B[static_cast<std::size_t>(d - 1)], pure);
        } else {
          r = dde::check_condition_C(g);
        }
        r.layer = d;
        reports.push_back(std::move(r));
      }
    } else {
      dde::fail(dde::ErrorCode::InvalidArgument, "unknown condition '" + cond + "'");
    }
    dde::Tristate overall = dde::Tristate::Yes;
    dde::Json list = dde::Json::array();
    for (const auto& r : reports) {
      overall = worse(overall, r.holds);
      list.push_back(dde::report_to_json(r));
    }
    if (out_json) {
      dde::Json j;
      j["schema"] = dde::kSchema;
      j["condition"] = cond;
      j["holds"] = std::string(dde::to_string(overall));
      j["reports"] = list;
      *out_json = dup(j.dump(2));
    }
    if (verdict) *verdict = overall == dde::Tristate::Yes ? 0 : overall == dde::Tristate::No ? 1 : 2;
  });
}

int dde_evaluate(const dde_model* estimate, const dde_model* truth, const dde_dataset* data,
                 char** out_json) {
  return guarded([&] {
    need(estimate, "estimate");
    need(truth, "truth");
    need(out_json, "out_json");
    *out_json = dup(dde::evaluate_to_json(estimate->m, truth->m, data ? &data->d : nullptr).dump(2));
  });
}

int dde_posterior_latents(const dde_model* model, const dde_dataset* data, dde_latents** out) {
  return guarded([&] {
    need(model, "model");
    need(data, "data");
    need(out, "out");
    *out = new dde_latents{dde::posterior_latents(model->m, data->d).A};
  });
}

int dde_perplexity(const dde_model* model, const dde_dataset* data, double train_fraction,
                   uint64_t seed, char** out_json) {
  return guarded([&] {
    need(model, "model");
    need(data, "data");
    need(out_json, "out_json");
    const dde::HeldoutPerplexity h = dde::heldout_perplexity(model->m, data->d, train_fraction, seed);
    const dde::PosteriorLatents post = dde::posterior_latents(model->m, data->d);
    dde::Json j;
    j["schema"] = dde::kSchema;
    j["perplexity"] = dde::perplexity(model->m, data->d, post.A);
    j["heldout_train"] = h.train;
    j["heldout_test"] = h.test;
    j["train_fraction"] = train_fraction;
    j["seed"] = seed;
    *out_json = dup(j.dump(2));
  });
}

int dde_topic_metrics(const dde_model* model, const dde_dataset* doc_freq, size_t top_m,
                      char** out_json) {
  return guarded([&] {
    need(model, "model");
    need(doc_freq, "doc_freq");
    need(out_json, "out_json");
    const dde::TopicMetrics t = dde::topic_metrics(model->m.B[0], doc_freq->d.Y, static_cast<dde::Index>(top_m));
    *out_json = dup(dde::topic_metrics_to_json(t).dump(2));
  });
}

int dde_benchmark(const char* spec_json, char** result_json, char** curves_csv) {
  return guarded([&] {
    need(spec_json, "spec_json");
    dde::Json j;
    try {
      j = dde::Json::parse(spec_json);
    } catch (const nlohmann::json::parse_error& e) {
      dde::fail(dde::ErrorCode::Validation, e.what());
    }
    const dde::BenchResult res = dde::run_benchmark(dde::experiment_from_json(j));
    if (result_json) *result_json = dup(dde::bench_to_json(res).dump(2));
    if (curves_csv) *curves_csv = dup(dde::bench_curves_csv(res));
  });
}

int dde_file_digest(const char* path, char** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = dup(dde::file_digest(path));
  });
}

}  // extern "C"
