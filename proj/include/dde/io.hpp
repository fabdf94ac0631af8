#pragma once

#include "dde/estimation.hpp"
#include "dde/evaluation.hpp"
#include "dde/identifiability.hpp"
#include "dde/model.hpp"
#include "dde/spectral.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dde {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchema = "dde/v1";

Json family_to_json(const ObservedFamily& family);
ObservedFamily family_from_json(const Json& j);
/// Parses "bernoulli", "normal", ... or a block list "bernoulli:20,lognormal:20".
ObservedFamily parse_family(std::string_view text);
std::string family_to_string(const ObservedFamily& family);

Json model_to_json(const DdeModel& model);
/// Validates the result; slopes below kFileGraphTolerance are snapped to zero.
DdeModel model_from_json(const Json& j);

DdeModel load_model(const std::string& path);
void save_model(const DdeModel& model, const std::string& path);

/// Header-free numeric grid; commas separate cells, blank lines are skipped.
RowMatrix read_csv(const std::string& path);
RowMatrix parse_csv(std::string_view text, const std::string& origin = "<memory>");
std::string format_csv(const RowMatrix& M);
std::string format_csv(const BinaryMatrix& M);
void write_csv(const std::string& path, const RowMatrix& M);
void write_csv(const std::string& path, const BinaryMatrix& M);

std::string read_text(const std::string& path);
void write_text(const std::string& path, std::string_view text);
Json read_json(const std::string& path);
void write_json(const std::string& path, const Json& j);

/// 64-bit FNV-1a as 16 hex digits.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept;
std::string hex_digest(std::uint64_t h);
std::string file_digest(const std::string& path);

Json graphs_to_json(const GraphSet& G);
Json matrix_to_json(const Matrix& M);
Json binary_to_json(const BinaryMatrix& M);
Json report_to_json(const FitReport& report);
Json report_to_json(const ConditionReport& report);
Json selection_to_json(const DimensionSelection& sel);
Json topic_metrics_to_json(const TopicMetrics& m);
Json penalty_to_json(const Penalty& p);

/// Fit options from a flat JSON object: algo, penalty, lambda, tau,
/// gibbs_c, burn_in, step_exponent, max_iter, seed, conv. Unknown keys are
/// rejected. lambda/tau apply to every layer; "layers" may list
/// per-layer penalty objects instead.
FitConfig fit_config_from_json(const Json& j, Index N, Index D);

/// {schema, accuracy_G, accuracy_overall, rmse, alignment}; adds loglik and
/// ebic when data is given.
Json evaluate_to_json(const DdeModel& est, const DdeModel& truth, const Dataset* data);

}  // namespace dde
