#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "attribkit/attribution.hpp"
#include "attribkit/compensation.hpp"
#include "attribkit/cost.hpp"
#include "attribkit/model_io.hpp"
#include "attribkit/textio.hpp"

namespace attribkit {

struct AttributionRow {
    std::string record_id;
    AttributionVector attribution;
};

inline std::string attribution_csv(const std::vector<AttributionRow>& rows) {
    std::string out = "record_id,method,class_index,feature_index,contribution\n";
    for (const AttributionRow& row : rows) {
        const AttributionVector& av = row.attribution;
        for (std::size_t i = 0; i < av.per_feature.size(); ++i) {
            out += row.record_id + "," + to_string(av.method) + "," +
                   std::to_string(av.class_index) + "," + std::to_string(i) + "," +
                   format_real(av.per_feature[i]) + "\n";
        }
    }
    return out;
}

// Writes <path> and a <path>.meta.json sidecar describing how the
// attributions were produced. All rows must share one method configuration.
inline void write_attribution_csv(const std::vector<AttributionRow>& rows,
                                  const std::string& path) {
    if (rows.empty()) {
        throw std::invalid_argument("write_attribution_csv: no rows");
    }
    write_text_file(path, attribution_csv(rows));
    const AttributionVector& first = rows.front().attribution;
    nlohmann::json meta;
    meta["method"] = to_string(first.method);
    meta["class_index"] = first.class_index;
    meta["granularity"] = to_string(first.granularity);
    meta["baseline"] = first.baseline_descriptor;
    meta["steps"] = first.steps;
    meta["samples"] = first.samples;
    meta["seed"] = first.seed;
    meta["n_records"] = rows.size();
    meta["n_features"] = first.per_feature.size();
    write_text_file(path + ".meta.json", meta.dump(2) + "\n");
}

inline std::string delta_to_json(const CompensationDelta& delta) {
    nlohmann::json j;
    j["format"] = "attribkit-delta";
    j["version"] = 1;
    j["class_index"] = delta.class_index;
    j["granularity"] = to_string(delta.granularity);
    j["k_references"] = delta.k_references;
    j["ig_steps"] = delta.ig_steps;
    j["ss_samples"] = delta.ss_samples;
    j["ss_seed"] = delta.ss_seed;
    j["ss_background_size"] = delta.ss_background_size;
    j["reference_ids"] = delta.reference_ids;
    nlohmann::json pf = nlohmann::json::array();
    for (double v : delta.per_feature) pf.push_back(format_real(v));
    j["per_feature"] = std::move(pf);
    nlohmann::json se = nlohmann::json::array();
    for (double v : delta.standard_error) se.push_back(format_real(v));
    j["standard_error"] = std::move(se);
    nlohmann::json rows = nlohmann::json::array();
    for (const std::vector<double>& ref : delta.per_reference_deltas) {
        nlohmann::json row = nlohmann::json::array();
        for (double v : ref) row.push_back(format_real(v));
        rows.push_back(std::move(row));
    }
    j["per_reference_deltas"] = std::move(rows);
    return j.dump(2) + "\n";
}

inline CompensationDelta delta_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("delta: invalid JSON: ") + e.what());
    }
    if (!j.is_object() || detail::json_str(j, "format", "delta") != "attribkit-delta") {
        throw std::invalid_argument("delta: not an attribkit-delta document");
    }
    CompensationDelta delta;
    delta.class_index = detail::json_int(j, "class_index", "delta");
    const std::string gran = detail::json_str(j, "granularity", "delta");
    if (gran == "channel") {
        delta.granularity = Granularity::channel;
    } else if (gran == "timepoint") {
        delta.granularity = Granularity::timepoint;
    } else {
        throw std::invalid_argument("delta: unknown granularity '" + gran + "'");
    }
    delta.k_references = detail::json_int(j, "k_references", "delta");
    delta.ig_steps = detail::json_int(j, "ig_steps", "delta");
    delta.ss_samples = detail::json_int(j, "ss_samples", "delta");
    if (!j.contains("ss_seed") || !j["ss_seed"].is_number_unsigned()) {
        throw std::invalid_argument("delta: missing unsigned field 'ss_seed'");
    }
    delta.ss_seed = j["ss_seed"].get<std::uint64_t>();
    delta.ss_background_size = detail::json_int(j, "ss_background_size", "delta");
    if (!j.contains("reference_ids") || !j["reference_ids"].is_array()) {
        throw std::invalid_argument("delta: missing 'reference_ids' array");
    }
    for (const auto& id : j["reference_ids"]) {
        if (!id.is_string()) throw std::invalid_argument("delta: reference_ids must be strings");
        delta.reference_ids.push_back(id.get<std::string>());
    }
    if (!j.contains("per_feature")) {
        throw std::invalid_argument("delta: missing 'per_feature'");
    }
    delta.per_feature = detail::reals_from_json(j["per_feature"], "delta per_feature");
    if (!j.contains("standard_error")) {
        throw std::invalid_argument("delta: missing 'standard_error'");
    }
    delta.standard_error = detail::reals_from_json(j["standard_error"], "delta standard_error");
    if (!j.contains("per_reference_deltas") || !j["per_reference_deltas"].is_array()) {
        throw std::invalid_argument("delta: missing 'per_reference_deltas' array");
    }
    for (const auto& row : j["per_reference_deltas"]) {
        delta.per_reference_deltas.push_back(
            detail::reals_from_json(row, "delta per_reference_deltas row"));
        if (delta.per_reference_deltas.back().size() != delta.per_feature.size()) {
            throw std::invalid_argument("delta: per_reference_deltas row length does not match "
                                        "per_feature");
        }
    }
    if (delta.standard_error.size() != delta.per_feature.size() ||
        delta.per_reference_deltas.size() != delta.reference_ids.size() ||
        delta.k_references != static_cast<int>(delta.reference_ids.size())) {
        throw std::invalid_argument("delta: inconsistent field lengths");
    }
    return delta;
}

inline void save_delta(const CompensationDelta& delta, const std::string& path) {
    write_text_file(path, delta_to_json(delta));
}

inline CompensationDelta load_delta(const std::string& path) {
    try {
        return delta_from_json(read_text_file(path));
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

// {params, costs: [{method, count, ratio}], ratio: "a:b:c"}
inline std::string cost_report_json(const CostParams& params) {
    nlohmann::json j;
    j["params"] = {{"ig_steps", params.ig_steps},
                   {"n_records", params.n_records},
                   {"n_sensors", params.n_sensors},
                   {"ss_evals_per_sensor", params.ss_evals_per_sensor},
                   {"k_compensation", params.k_compensation},
                   {"backprop_cost_ratio", format_real(params.backprop_cost_ratio)}};
    const std::string ratio = cost_ratio_string(params);
    const std::vector<std::string> parts = split(ratio, ':');
    nlohmann::json costs = nlohmann::json::array();
    const Method methods[3] = {Method::ig, Method::cig, Method::ss};
    for (int i = 0; i < 3; ++i) {
        nlohmann::json entry;
        entry["method"] = to_string(methods[i]);
        entry["count"] = static_cast<long long>(cost(params, methods[i]));
        entry["ratio"] = static_cast<long long>(parse_integer(parts[i], "cost ratio"));
        costs.push_back(std::move(entry));
    }
    j["costs"] = std::move(costs);
    j["ratio"] = ratio;
    return j.dump(2) + "\n";
}

}  // namespace attribkit
