#include "dde/io.hpp"

#include "dde/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dde {

namespace {

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Json index_list(const std::vector<Index>& v) {
  Json out = Json::array();
  for (Index x : v) out.push_back(x);
  return out;
}

Vector vector_from_json(const Json& j, const char* what) {
  require(j.is_array(), ErrorCode::Validation, std::string(what) + " must be an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    require(j[i].is_number(), ErrorCode::Validation, std::string(what) + " must hold numbers");
    v[static_cast<Index>(i)] = j[i].get<double>();
  }
  return v;
}

Matrix matrix_from_json(const Json& j, const char* what) {
  require(j.is_array() && !j.empty(), ErrorCode::Validation,
          std::string(what) + " must be a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix M(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    require(j[r].is_array() && j[r].size() == cols, ErrorCode::Validation,
            std::string(what) + " rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c) {
      require(j[r][c].is_number(), ErrorCode::Validation, std::string(what) + " must hold numbers");
      M(static_cast<Index>(r), static_cast<Index>(c)) = j[r][c].get<double>();
    }
  }
  return M;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

void append_number(std::string& out, double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  out.append(buf, res.ptr);
}

template <class M>
std::string csv_of(const M& m) {
  std::string out;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out.push_back(',');
      append_number(out, static_cast<double>(m(i, j)));
    }
    out.push_back('\n');
  }
  return out;
}

std::string family_key(FamilyKind k) { return std::string(to_string(k)); }

}  // namespace

Json family_to_json(const ObservedFamily& family) {
  Json j = Json::object();
  if (family.is_uniform()) {
    j["kind"] = family_key(family.uniform_kind());
  } else {
    Json blocks = Json::array();
    for (const auto& b : family.block_list())
      blocks.push_back(Json{{"kind", family_key(b.kind)}, {"count", b.count}});
    j["blocks"] = blocks;
  }
  return j;
}

ObservedFamily family_from_json(const Json& j) {
  if (j.is_string()) return parse_family(j.get<std::string>());
  require(j.is_object(), ErrorCode::Validation, "family must be an object or a string");
  if (j.contains("kind")) return ObservedFamily::uniform(parse_family_kind(j.at("kind").get<std::string>()));
  require(j.contains("blocks") && j.at("blocks").is_array(), ErrorCode::Validation,
          "family needs 'kind' or 'blocks'");
  std::vector<ObservedFamily::Block> blocks;
  for (const auto& b : j.at("blocks"))
    blocks.push_back({parse_family_kind(b.at("kind").get<std::string>()), b.at("count").get<Index>()});
  return ObservedFamily::blocks(std::move(blocks));
}

ObservedFamily parse_family(std::string_view text) {
  if (text.find(':') == std::string_view::npos) return ObservedFamily::uniform(parse_family_kind(trim(text)));
  std::vector<ObservedFamily::Block> blocks;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    const std::string part = trim(text.substr(pos, comma - pos));
    const std::size_t colon = part.find(':');
    require(colon != std::string::npos, ErrorCode::InvalidArgument,
            "family block '" + part + "' must look like kind:count");
    Index count = 0;
    const std::string num = part.substr(colon + 1);
    auto res = std::from_chars(num.data(), num.data() + num.size(), count);
    require(res.ec == std::errc() && res.ptr == num.data() + num.size() && count > 0,
            ErrorCode::InvalidArgument, "bad block count in '" + part + "'");
    blocks.push_back({parse_family_kind(part.substr(0, colon)), count});
    pos = comma + 1;
  }
  return ObservedFamily::blocks(std::move(blocks));
}

std::string family_to_string(const ObservedFamily& family) {
  if (family.is_uniform()) return family_key(family.uniform_kind());
  std::string out;
  for (const auto& b : family.block_list()) {
    if (!out.empty()) out.push_back(',');
    out += family_key(b.kind) + ":" + std::to_string(b.count);
  }
  return out;
}

Json matrix_to_json(const Matrix& M) {
  Json out = Json::array();
  for (Index r = 0; r < M.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

Json binary_to_json(const BinaryMatrix& M) {
  Json out = Json::array();
  for (Index r = 0; r < M.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < M.cols(); ++c) row.push_back(static_cast<int>(M(r, c)));
    out.push_back(std::move(row));
  }
  return out;
}

Json model_to_json(const DdeModel& model) {
  Json j;
  j["schema"] = kSchema;
  j["D"] = model.depth();
  j["K"] = index_list(model.K);
  j["J"] = model.J;
  j["family"] = family_to_json(model.family);
  j["p"] = vector_to_json(model.p);
  Json B = Json::array();
  for (const auto& b : model.B) B.push_back(matrix_to_json(b));
  j["B"] = B;
  j["gamma"] = vector_to_json(model.gamma);
  return j;
}

DdeModel model_from_json(const Json& j) {
  require(j.is_object(), ErrorCode::Validation, "model JSON must be an object");
  if (j.contains("schema"))
    require(j.at("schema") == kSchema, ErrorCode::Validation,
            "unsupported schema " + j.at("schema").dump());
  for (const char* key : {"K", "J", "family", "p", "B"})
    require(j.contains(key), ErrorCode::Validation, std::string("model JSON lacks '") + key + "'");
  DdeModel m;
  try {
    m.J = j.at("J").get<Index>();
    for (const auto& k : j.at("K")) m.K.push_back(k.get<Index>());
    m.family = family_from_json(j.at("family"));
    m.p = vector_from_json(j.at("p"), "p");
    require(j.at("B").is_array(), ErrorCode::Validation, "B must be an array of matrices");
    for (const auto& b : j.at("B")) m.B.push_back(matrix_from_json(b, "B"));
    if (j.contains("gamma")) m.gamma = vector_from_json(j.at("gamma"), "gamma");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Validation, std::string("malformed model JSON: ") + e.what());
  } catch (const Error& e) {
    fail(ErrorCode::Validation, e.what());
  }
  if (j.contains("D"))
    require(j.at("D").get<Index>() == m.depth(), ErrorCode::Validation, "D disagrees with K");
  for (auto& B : m.B)
    for (Index r = 0; r < B.rows(); ++r)
      for (Index c = 1; c < B.cols(); ++c)
        if (std::abs(B(r, c)) <= kFileGraphTolerance) B(r, c) = 0.0;
  validate(m);
  return m;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  require(!in.bad(), ErrorCode::Io, "read failed: " + path);
  return ss.str();
}

void write_text(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  require(static_cast<bool>(out), ErrorCode::Io, "write failed: " + path);
}

Json read_json(const std::string& path) {
  const std::string text = read_text(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::Validation, path + ": " + e.what());
  }
}

void write_json(const std::string& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

DdeModel load_model(const std::string& path) {
  const Json j = read_json(path);
  try {
    return model_from_json(j);
  } catch (const Error& e) {
    fail(e.code(), path + ": " + e.what());
  }
}

void save_model(const DdeModel& model, const std::string& path) {
  write_json(path, model_to_json(model));
}

RowMatrix parse_csv(std::string_view text, const std::string& origin) {
  std::vector<double> cells;
  Index cols = -1, rows = 0, line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;
    Index count = 0;
    std::size_t cpos = 0;
    while (true) {
      std::size_t comma = line.find(',', cpos);
      const std::string cell = trim(line.substr(cpos, comma == std::string_view::npos ? std::string_view::npos : comma - cpos));
      double v = 0.0;
      const char* first = cell.data();
      if (!cell.empty() && cell[0] == '+') ++first;
      auto res = std::from_chars(first, cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || cell.empty()) {
        if (cell == "nan" || cell == "NaN") {
          v = std::nan("");
        } else {
          fail(ErrorCode::Validation, origin + ":" + std::to_string(line_no) + ": not a number: '" + cell + "'");
        }
      }
      cells.push_back(v);
      ++count;
      if (comma == std::string_view::npos) break;
      cpos = comma + 1;
    }
    if (cols < 0) cols = count;
    require(count == cols, ErrorCode::Validation,
            origin + ":" + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                " cells, found " + std::to_string(count));
    ++rows;
  }
  require(rows > 0, ErrorCode::Validation, origin + ": no data rows");
  RowMatrix M(rows, cols);
  std::copy(cells.begin(), cells.end(), M.data());
  return M;
}

RowMatrix read_csv(const std::string& path) { return parse_csv(read_text(path), path); }

std::string format_csv(const RowMatrix& M) { return csv_of(M); }
std::string format_csv(const BinaryMatrix& M) { return csv_of(M); }
void write_csv(const std::string& path, const RowMatrix& M) { write_text(path, csv_of(M)); }
void write_csv(const std::string& path, const BinaryMatrix& M) { write_text(path, csv_of(M)); }

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) noexcept {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex_digest(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_digest(const std::string& path) { return hex_digest(fnv1a(read_text(path))); }

Json graphs_to_json(const GraphSet& G) {
  Json out = Json::array();
  for (const auto& g : G.layers) out.push_back(binary_to_json(g));
  return out;
}

Json penalty_to_json(const Penalty& p) {
  return Json{{"kind", std::string(to_string(p.kind))}, {"lambda", p.lambda}, {"tau", p.tau}};
}

Json report_to_json(const FitReport& report) {
  Json j;
  j["schema"] = kSchema;
  j["algo"] = std::string(to_string(report.algo));
  j["seed"] = report.seed;
  j["iters"] = report.iters;
  j["converged"] = report.converged;
  j["solver_failures"] = report.solver_failures;
  j["wallclock_seconds"] = report.wallclock_seconds;
  j["objective_trace"] = report.objective_trace;
  j["graphs"] = graphs_to_json(report.graphs_hat);
  j["model"] = model_to_json(report.model_hat);
  return j;
}

Json report_to_json(const ConditionReport& r) {
  Json j;
  j["condition"] = r.condition;
  j["layer"] = r.layer;
  j["holds"] = std::string(to_string(r.holds));
  if (!r.note.empty()) j["note"] = r.note;
  if (!r.pure_children.empty()) {
    Json pc = Json::array();
    for (const auto& rows : r.pure_children) pc.push_back(index_list(rows));
    j["pure_children"] = pc;
  }
  if (!r.witness_rows.empty()) j["witness_rows"] = index_list(r.witness_rows);
  if (r.violating_pair) {
    Json pair = Json::array();
    pair.push_back(r.violating_pair->first);
    pair.push_back(r.violating_pair->second);
    j["violating_pair"] = pair;
  }
  if (!r.I1.empty() || !r.I2.empty()) {
    j["I1"] = index_list(r.I1);
    j["I2"] = index_list(r.I2);
    j["I3"] = index_list(r.I3);
    j["match1"] = index_list(r.match1);
    j["match2"] = index_list(r.match2);
  }
  return j;
}

Json selection_to_json(const DimensionSelection& sel) {
  Json j;
  j["schema"] = kSchema;
  j["K"] = index_list(sel.K);
  Json grids = Json::array(), spectra = Json::array();
  for (const auto& g : sel.grids) grids.push_back(index_list(g));
  for (const auto& s : sel.spectra) spectra.push_back(vector_to_json(s));
  j["grids"] = grids;
  j["spectra"] = spectra;
  j["warnings"] = sel.warnings;
  return j;
}

Json topic_metrics_to_json(const TopicMetrics& m) {
  Json j;
  j["schema"] = kSchema;
  Json reps = Json::array();
  for (const auto& r : m.representatives) reps.push_back(index_list(r));
  j["representatives"] = reps;
  j["neg_coherence"] = m.neg_coherence;
  j["similarity"] = m.similarity;
  j["warnings"] = m.warnings;
  return j;
}

FitConfig fit_config_from_json(const Json& j, Index N, Index D) {
  require(j.is_object() || j.is_null(), ErrorCode::InvalidArgument, "fit options must be a JSON object");
  FitConfig cfg;
  if (j.is_null()) return cfg;
  static const char* known[] = {"algo", "penalty", "lambda", "tau", "observed_penalty", "layers",
                                "gibbs_c", "burn_in", "step_exponent", "max_iter", "seed", "conv",
                                "init", "accelerate", "marginal_latent_dim"};
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    require(ok, ErrorCode::InvalidArgument, "unknown fit option '" + key + "'");
  }
  try {
    if (j.contains("algo")) cfg.algo = parse_algorithm(j.at("algo").get<std::string>());
    if (j.contains("gibbs_c")) cfg.gibbs_C = j.at("gibbs_c").get<Index>();
    if (j.contains("burn_in")) cfg.burn_in = j.at("burn_in").get<Index>();
    if (j.contains("step_exponent")) cfg.step_exponent = j.at("step_exponent").get<double>();
    if (j.contains("max_iter")) cfg.max_iter = j.at("max_iter").get<Index>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("accelerate")) cfg.accelerate = j.at("accelerate").get<bool>();
    if (j.contains("marginal_latent_dim")) cfg.marginal_latent_dim = j.at("marginal_latent_dim").get<Index>();
    if (j.contains("conv")) {
      cfg.conv_pem = j.at("conv").get<double>();
      cfg.conv_saem = cfg.conv_pem;
    }
    if (j.contains("layers")) {
      require(j.at("layers").is_array() && static_cast<Index>(j.at("layers").size()) == D,
              ErrorCode::InvalidArgument, "'layers' needs one penalty per latent layer");
      for (const auto& l : j.at("layers")) {
        Penalty p = default_tuning(N);
        if (l.contains("kind")) p.kind = parse_penalty_kind(l.at("kind").get<std::string>());
        if (l.contains("lambda")) p.lambda = l.at("lambda").get<double>();
        if (l.contains("tau")) p.tau = l.at("tau").get<double>();
        cfg.penalties.push_back(p);
      }
    } else if (j.contains("penalty") || j.contains("lambda") || j.contains("tau") ||
               j.contains("observed_penalty")) {
      Penalty p = default_tuning(N);
      if (j.contains("penalty")) p.kind = parse_penalty_kind(j.at("penalty").get<std::string>());
      if (j.contains("lambda")) p.lambda = j.at("lambda").get<double>();
      if (j.contains("tau")) p.tau = j.at("tau").get<double>();
      cfg.penalties.assign(static_cast<std::size_t>(D), p);
      if (j.contains("observed_penalty"))
        cfg.penalties[0].kind = parse_penalty_kind(j.at("observed_penalty").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("bad fit option: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

Json evaluate_to_json(const DdeModel& est, const DdeModel& truth, const Dataset* data) {
  require(est.K == truth.K && est.J == truth.J, ErrorCode::Validation,
          "estimated and true models have different dimensions");
  require(est.family == truth.family, ErrorCode::Validation,
          "estimated and true models use different families");
  const Alignment a = align(est, truth);
  const GraphSet Gh = graphs_from_coefficients(est, kFileGraphTolerance);
  const GraphSet Gs = graphs_from_coefficients(truth, kFileGraphTolerance);
  Json j;
  j["schema"] = kSchema;
  j["accuracy_G"] = accuracy_G(Gh, Gs, a);
  j["accuracy_overall"] = accuracy_G_overall(Gh, Gs, a);
  j["rmse"] = rmse_theta(est, truth, a);
  Json perms = Json::array();
  for (const auto& p : a.perms) perms.push_back(index_list(p));
  j["alignment"] = perms;
  if (data) {
    validate_dataset(*data, est.family);
    require(data->cols() == est.J, ErrorCode::Validation, "data width differs from the model's J");
    if (est.total_latent_bits() <= kDefaultEnumerationCap) {
      const EbicResult e = ebic(est, *data);
      j["loglik"] = e.loglik;
      j["ebic"] = e.ebic;
      j["df"] = e.df;
    } else {
      j["note"] = "loglik skipped: latent space exceeds the enumeration cap";
    }
  }
  return j;
}

}  // namespace dde
