#include "dde/dde.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace {

using Json = nlohmann::ordered_json;

constexpr int kExitUsage = 64;
constexpr int kExitData = 65;
constexpr int kExitSoftware = 70;
constexpr int kExitIo = 74;

struct Failure {
  int exit_code;
  std::string message;
};

int exit_code_for(int status) {
  switch (status) {
    case DDE_E_INVALID_ARGUMENT: return kExitUsage;
    case DDE_E_SHAPE:
    case DDE_E_VALIDATION: return kExitData;
    case DDE_E_IO: return kExitIo;
    default: return kExitSoftware;
  }
}

void check(int status) {
  if (status != DDE_OK) throw Failure{exit_code_for(status), dde_last_error()};
}

struct ModelDel { void operator()(dde_model* p) const { dde_model_free(p); } };
struct DataDel { void operator()(dde_dataset* p) const { dde_dataset_free(p); } };
struct LatDel { void operator()(dde_latents* p) const { dde_latents_free(p); } };
struct ReportDel { void operator()(dde_fit_report* p) const { dde_fit_report_free(p); } };
using ModelPtr = std::unique_ptr<dde_model, ModelDel>;
using DataPtr = std::unique_ptr<dde_dataset, DataDel>;
using LatPtr = std::unique_ptr<dde_latents, LatDel>;
using ReportPtr = std::unique_ptr<dde_fit_report, ReportDel>;

std::string take(char* s) {
  std::string out = s ? s : "";
  dde_string_free(s);
  return out;
}

ModelPtr load_model(const std::string& path) {
  dde_model* m = nullptr;
  check(dde_model_load(path.c_str(), &m));
  return ModelPtr(m);
}

DataPtr load_data(const std::string& path) {
  dde_dataset* d = nullptr;
  check(dde_dataset_read_csv(path.c_str(), &d));
  return DataPtr(d);
}

std::string digest(const std::string& path) {
  char* out = nullptr;
  check(dde_file_digest(path.c_str(), &out));
  return take(out);
}

std::vector<std::size_t> parse_list(const std::string& text, const char* what) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long v = std::stol(item, &used);
      if (used != item.size() || v <= 0) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw Failure{kExitUsage, std::string("bad ") + what + " entry '" + item + "'"};
    }
  }
  if (out.empty()) throw Failure{kExitUsage, std::string(what) + " is empty"};
  return out;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Failure{kExitIo, "cannot write " + path};
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
  if (!out) throw Failure{kExitIo, "write failed: " + path};
}

void emit_json(Json j, const std::string& path) { emit(j.dump(2) + "\n", path); }

Json parse(const std::string& text) { return Json::parse(text); }

Json provenance(const std::vector<std::pair<std::string, std::string>>& inputs,
                std::uint64_t seed) {
  Json in = Json::object();
  for (const auto& [name, path] : inputs)
    if (!path.empty()) in[name] = digest(path);
  Json p;
  p["inputs_digest"] = in;
  p["seed"] = seed;
  return p;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string kind = "strict", dims, family = "normal", out_dir = ".", prefix = "sim";
  std::size_t n = 0;
  std::uint64_t seed = 1;
};

int run_simulate(const SimulateArgs& a) {
  const auto all = parse_list(a.dims, "dims");
  if (all.size() < 2) throw Failure{kExitUsage, "--dims needs J and at least one latent size"};
  std::vector<std::size_t> K(all.begin() + 1, all.end());
  dde_model* raw = nullptr;
  check(dde_model_benchmark(a.kind.c_str(), all[0], K.data(), K.size(), a.family.c_str(), &raw));
  ModelPtr model(raw);
  dde_dataset* d = nullptr;
  dde_latents* l = nullptr;
  check(dde_sample(model.get(), a.n, a.seed, &d, &l));
  DataPtr data(d);
  LatPtr lat(l);
  const std::string base = a.out_dir + "/" + a.prefix;
  check(dde_dataset_write_csv(data.get(), (base + "_data.csv").c_str()));
  check(dde_model_save(model.get(), (base + "_truth.json").c_str()));
  check(dde_latents_write_csv(lat.get(), 0, (base + "_latents.csv").c_str()));
  std::cout << "seed " << a.seed << "\n"
            << base << "_data.csv\n" << base << "_truth.json\n" << base << "_latents.csv\n";
  return 0;
}

// ---------------------------------------------------------------- init

struct InitArgs {
  std::string data, family, dims, out, latents_out;
};

int run_init(const InitArgs& a) {
  const auto K = parse_list(a.dims, "dims");
  DataPtr data = load_data(a.data);
  dde_model* m = nullptr;
  dde_latents* l = nullptr;
  char* warnings = nullptr;
  check(dde_spectral_init(data.get(), a.family.c_str(), K.data(), K.size(), &m, &l, &warnings));
  ModelPtr model(m);
  LatPtr lat(l);
  const Json warn = parse(take(warnings));
  char* text = nullptr;
  check(dde_model_to_json(model.get(), &text));
  Json j = parse(take(text));
  j["provenance"] = provenance({{"data", a.data}}, 0);
  j["warnings"] = warn;
  emit_json(j, a.out);
  if (!a.latents_out.empty()) check(dde_latents_write_csv(lat.get(), 0, a.latents_out.c_str()));
  for (const auto& w : warn) std::cerr << "warning: " << w.get<std::string>() << "\n";
  return 0;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string data, family, dims, algo = "saem", init = "spectral", init_model, out, model_out;
  std::string penalty, observed_penalty;
  double lambda = -1.0, tau = -1.0;
  long gibbs_c = 1, max_iter = 100, burn_in = -1;
  std::uint64_t seed = 1;
};

int run_fit(const FitArgs& a) {
  const auto K = parse_list(a.dims, "dims");
  DataPtr data = load_data(a.data);
  Json opts;
  opts["algo"] = a.algo;
  opts["gibbs_c"] = a.gibbs_c;
  opts["max_iter"] = a.max_iter;
  opts["seed"] = a.seed;
  if (a.burn_in >= 0) opts["burn_in"] = a.burn_in;
  if (!a.penalty.empty()) opts["penalty"] = a.penalty;
  if (!a.observed_penalty.empty()) opts["observed_penalty"] = a.observed_penalty;
  if (a.lambda >= 0.0) opts["lambda"] = a.lambda;
  if (a.tau > 0.0) opts["tau"] = a.tau;
  ModelPtr start;
  if (a.init == "file") {
    if (a.init_model.empty()) throw Failure{kExitUsage, "--init file needs --init-model"};
    start = load_model(a.init_model);
  } else {
    opts["init"] = a.init;
  }
  dde_fit_report* r = nullptr;
  check(dde_fit(data.get(), a.family.c_str(), K.data(), K.size(), start.get(), opts.dump().c_str(), &r));
  ReportPtr report(r);
  char* text = nullptr;
  check(dde_fit_report_to_json(report.get(), &text));
  Json j = parse(take(text));
  j["provenance"] = provenance({{"data", a.data}, {"init_model", a.init_model}}, a.seed);
  j["options"] = opts;
  emit_json(j, a.out);
  if (!a.model_out.empty()) {
    dde_model* m = nullptr;
    check(dde_fit_report_model(report.get(), &m));
    ModelPtr est(m);
    check(dde_model_save(est.get(), a.model_out.c_str()));
  }
  return 0;
}

// ---------------------------------------------------------------- select-k

struct SelectArgs {
  std::string data, family, grid, out;
  std::size_t layers = 2;
};

int run_select(const SelectArgs& a) {
  DataPtr data = load_data(a.data);
  std::vector<std::size_t> grid;
  if (!a.grid.empty()) grid = parse_list(a.grid, "grid");
  char* text = nullptr;
  check(dde_select_k(data.get(), a.family.c_str(), a.layers, grid.empty() ? nullptr : grid.data(),
                     grid.size(), &text));
  Json j = parse(take(text));
  j["provenance"] = provenance({{"data", a.data}}, 0);
  emit_json(j, a.out);
  return 0;
}

// ---------------------------------------------------------------- check-id

struct CheckArgs {
  std::string model, condition = "C", out;
};

int run_check(const CheckArgs& a) {
  ModelPtr model = load_model(a.model);
  char* text = nullptr;
  int verdict = 2;
  check(dde_check_id(model.get(), a.condition.c_str(), &text, &verdict));
  Json j = parse(take(text));
  j["provenance"] = provenance({{"model", a.model}}, 0);
  emit_json(j, a.out);
  return verdict;
}

// ---------------------------------------------------------------- evaluate

struct EvalArgs {
  std::string est, truth, data, out;
};

int run_evaluate(const EvalArgs& a) {
  ModelPtr est = load_model(a.est);
  ModelPtr truth = load_model(a.truth);
  DataPtr data;
  if (!a.data.empty()) data = load_data(a.data);
  char* text = nullptr;
  check(dde_evaluate(est.get(), truth.get(), data.get(), &text));
  Json j = parse(take(text));
  j["provenance"] = provenance({{"est", a.est}, {"truth", a.truth}, {"data", a.data}}, 0);
  emit_json(j, a.out);
  return 0;
}

// ---------------------------------------------------------------- benchmark

struct BenchArgs {
  std::string spec, out, curves;
};

int run_benchmark(const BenchArgs& a) {
  std::ifstream in(a.spec, std::ios::binary);
  if (!in) throw Failure{kExitIo, "cannot open " + a.spec};
  std::stringstream ss;
  ss << in.rdbuf();
  char* result = nullptr;
  char* curves = nullptr;
  check(dde_benchmark(ss.str().c_str(), &result, &curves));
  Json j = parse(take(result));
  const std::string csv = take(curves);
  const std::uint64_t seed = j["spec"]["seed"].get<std::uint64_t>();
  j["provenance"] = provenance({{"spec", a.spec}}, seed);
  emit_json(j, a.out);
  if (!a.curves.empty()) emit(csv, a.curves);
  return 0;
}

// ---------------------------------------------------------------- metrics

struct TopicArgs {
  std::string model, doc_freq, out;
  std::size_t top_m = 15;
};

int run_topic(const TopicArgs& a) {
  ModelPtr model = load_model(a.model);
  DataPtr freq = load_data(a.doc_freq);
  char* text = nullptr;
  check(dde_topic_metrics(model.get(), freq.get(), a.top_m, &text));
  Json j = parse(take(text));
  j["provenance"] = provenance({{"model", a.model}, {"doc_freq", a.doc_freq}}, 0);
  emit_json(j, a.out);
  return 0;
}

struct PerplexityArgs {
  std::string model, data, out;
  double train_fraction = 0.8;
  std::uint64_t seed = 1;
};

int run_perplexity(const PerplexityArgs& a) {
  ModelPtr model = load_model(a.model);
  DataPtr data = load_data(a.data);
  char* text = nullptr;
  check(dde_perplexity(model.get(), data.get(), a.train_fraction, a.seed, &text));
  Json j = parse(take(text));
  j["provenance"] = provenance({{"model", a.model}, {"data", a.data}}, a.seed);
  emit_json(j, a.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep discrete encoders: simulate, initialise, fit and evaluate"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (0: DDE_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Sample data from benchmark parameters");
  s->add_option("--kind", sim.kind, "strict or generic")->check(CLI::IsMember({"strict", "generic"}));
  s->add_option("--dims", sim.dims, "J,K1,K2,...")->required();
  s->add_option("--family", sim.family, "Observed family, or blocks like bernoulli:9,normal:9");
  s->add_option("--n", sim.n, "Sample size")->required()->check(CLI::PositiveNumber);
  s->add_option("--seed", sim.seed);
  s->add_option("--out-dir", sim.out_dir);
  s->add_option("--prefix", sim.prefix);

  InitArgs ini;
  auto* i = app.add_subcommand("init", "Spectral initialisation");
  i->add_option("--data", ini.data)->required();
  i->add_option("--family", ini.family)->required();
  i->add_option("--dims", ini.dims, "K1,K2,...")->required();
  i->add_option("--out", ini.out, "Model JSON (stdout when omitted)");
  i->add_option("--latents-out", ini.latents_out);

  FitArgs fa;
  auto* f = app.add_subcommand("fit", "Penalized EM or SAEM");
  f->add_option("--data", fa.data)->required();
  f->add_option("--family", fa.family)->required();
  f->add_option("--dims", fa.dims, "K1,K2,...")->required();
  f->add_option("--algo", fa.algo)->check(CLI::IsMember({"pem", "saem"}));
  f->add_option("--penalty", fa.penalty)->check(CLI::IsMember({"tlp", "hard", "none"}));
  f->add_option("--observed-penalty", fa.observed_penalty)->check(CLI::IsMember({"tlp", "hard", "none"}));
  f->add_option("--lambda", fa.lambda)->check(CLI::NonNegativeNumber);
  f->add_option("--tau", fa.tau)->check(CLI::PositiveNumber);
  f->add_option("--gibbs-c", fa.gibbs_c)->check(CLI::PositiveNumber);
  f->add_option("--burn-in", fa.burn_in)->check(CLI::NonNegativeNumber);
  f->add_option("--max-iter", fa.max_iter)->check(CLI::NonNegativeNumber);
  f->add_option("--seed", fa.seed);
  f->add_option("--init", fa.init)->check(CLI::IsMember({"spectral", "random", "file"}));
  f->add_option("--init-model", fa.init_model);
  f->add_option("--out", fa.out, "Report JSON (stdout when omitted)");
  f->add_option("--model-out", fa.model_out);

  SelectArgs sel;
  auto* k = app.add_subcommand("select-k", "Spectral-ratio latent dimension selection");
  k->add_option("--data", sel.data)->required();
  k->add_option("--family", sel.family)->required();
  k->add_option("--layers", sel.layers)->check(CLI::PositiveNumber);
  k->add_option("--grid-override", sel.grid, "Comma-separated candidates for every layer");
  k->add_option("--out", sel.out);

  CheckArgs chk;
  auto* c = app.add_subcommand("check-id", "Identifiability conditions (exit 0 yes, 1 no, 2 unknown)");
  c->add_option("--model", chk.model)->required();
  c->add_option("--condition", chk.condition)
      ->check(CLI::IsMember({"A", "A3", "B", "C", "assumptions"}));
  c->add_option("--out", chk.out);

  EvalArgs ev;
  auto* e = app.add_subcommand("evaluate", "Align an estimate to the truth and score it");
  e->add_option("--est", ev.est)->required();
  e->add_option("--truth", ev.truth)->required();
  e->add_option("--data", ev.data);
  e->add_option("--out", ev.out);

  BenchArgs bn;
  auto* b = app.add_subcommand("benchmark", "Run a JSON experiment spec");
  b->add_option("--spec", bn.spec)->required();
  b->add_option("--out", bn.out);
  b->add_option("--curves", bn.curves, "CSV of per-N aggregates");

  auto* m = app.add_subcommand("metrics", "Topic and perplexity metrics");
  m->require_subcommand(1);
  TopicArgs tp;
  auto* mt = m->add_subcommand("topic", "Representative words, coherence, similarity");
  mt->add_option("--model", tp.model)->required();
  mt->add_option("--doc-freq", tp.doc_freq, "J x J document frequency CSV")->required();
  mt->add_option("--top-m", tp.top_m)->check(CLI::PositiveNumber);
  mt->add_option("--out", tp.out);
  PerplexityArgs px;
  auto* mp = m->add_subcommand("perplexity", "In-sample and held-out perplexity");
  mp->add_option("--model", px.model)->required();
  mp->add_option("--data", px.data)->required();
  mp->add_option("--train-fraction", px.train_fraction)->check(CLI::Range(0.0, 1.0));
  mp->add_option("--seed", px.seed);
  mp->add_option("--out", px.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kExitUsage;
  }

  try {
    if (threads > 0) check(dde_set_threads(threads));
    if (s->parsed()) return run_simulate(sim);
    if (i->parsed()) return run_init(ini);
    if (f->parsed()) return run_fit(fa);
    if (k->parsed()) return run_select(sel);
    if (c->parsed()) return run_check(chk);
    if (e->parsed()) return run_evaluate(ev);
    if (b->parsed()) return run_benchmark(bn);
    if (mt->parsed()) return run_topic(tp);
    if (mp->parsed()) return run_perplexity(px);
  } catch (const Failure& err) {
    std::cerr << "error: " << err.message << "\n";
    return err.exit_code;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitSoftware;
  }
  return kExitUsage;
}
