#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "attribkit/model.hpp"
#include "attribkit/textio.hpp"

namespace attribkit {

namespace detail {

// Reals travel as %.17g decimal strings so a save/load round trip is
// bit-exact regardless of how the JSON library prints numbers.
inline nlohmann::json reals_to_json(const Tensor& t) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < t.size(); ++i) arr.push_back(format_real(t[i]));
    return arr;
}

inline std::vector<double> reals_from_json(const nlohmann::json& arr, const std::string& context) {
    if (!arr.is_array()) {
        throw std::invalid_argument(context + ": expected an array of reals");
    }
    std::vector<double> out;
    out.reserve(arr.size());
    for (const auto& v : arr) {
        if (!v.is_string()) {
            throw std::invalid_argument(context + ": reals must be decimal strings");
        }
        out.push_back(parse_real(v.get<std::string>(), context));
    }
    return out;
}

inline int json_int(const nlohmann::json& obj, const std::string& key,
                    const std::string& context) {
    if (!obj.contains(key) || !obj[key].is_number_integer()) {
        throw std::invalid_argument(context + ": missing integer field '" + key + "'");
    }
    return obj[key].get<int>();
}

inline std::string json_str(const nlohmann::json& obj, const std::string& key,
                            const std::string& context) {
    if (!obj.contains(key) || !obj[key].is_string()) {
        throw std::invalid_argument(context + ": missing string field '" + key + "'");
    }
    return obj[key].get<std::string>();
}

}  // namespace detail

inline std::string model_to_json(const Model& model) {
    validate_model(model);
    nlohmann::json j;
    j["format"] = "attribkit-model";
    j["version"] = 1;
    j["architecture"] = to_string(model.architecture);
    j["n_channels"] = model.n_channels;
    j["input_length"] = model.input_length;
    j["n_classes"] = model.n_classes;
    nlohmann::json layers = nlohmann::json::array();
    for (const Layer& layer : model.layers) {
        nlohmann::json lj;
        lj["kind"] = to_string(layer.spec.kind);
        switch (layer.spec.kind) {
            case LayerKind::temporal_conv:
                lj["kernel_length"] = layer.spec.kernel_length;
                lj["in_features"] = layer.spec.in_features;
                lj["out_features"] = layer.spec.out_features;
                lj["weights"] = detail::reals_to_json(layer.weights);
                lj["bias"] = detail::reals_to_json(layer.bias);
                break;
            case LayerKind::spatiotemporal_conv:
                lj["kernel_length"] = layer.spec.kernel_length;
                lj["kernel_channels"] = layer.spec.kernel_channels;
                lj["in_features"] = layer.spec.in_features;
                lj["out_features"] = layer.spec.out_features;
                lj["weights"] = detail::reals_to_json(layer.weights);
                lj["bias"] = detail::reals_to_json(layer.bias);
                break;
            case LayerKind::activation:
                lj["activation"] = to_string(layer.spec.activation);
                break;
            case LayerKind::average_pool:
                lj["pool_window"] = layer.spec.pool_window;
                break;
            case LayerKind::dense:
                lj["in_features"] = layer.spec.in_features;
                lj["out_features"] = layer.spec.out_features;
                lj["weights"] = detail::reals_to_json(layer.weights);
                lj["bias"] = detail::reals_to_json(layer.bias);
                break;
        }
        layers.push_back(std::move(lj));
    }
    j["layers"] = std::move(layers);
    return j.dump(2) + "\n";
}

inline Model model_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("model: invalid JSON: ") + e.what());
    }
    if (!j.is_object() || detail::json_str(j, "format", "model") != "attribkit-model") {
        throw std::invalid_argument("model: not an attribkit-model document");
    }
    if (detail::json_int(j, "version", "model") != 1) {
        throw std::invalid_argument("model: unsupported version");
    }
    Model model;
    const std::string arch = detail::json_str(j, "architecture", "model");
    if (arch == "temporal") {
        model.architecture = Architecture::temporal;
    } else if (arch == "spatiotemporal") {
        model.architecture = Architecture::spatiotemporal;
    } else {
        throw std::invalid_argument("model: unknown architecture '" + arch + "'");
    }
    model.n_channels = detail::json_int(j, "n_channels", "model");
    model.input_length = detail::json_int(j, "input_length", "model");
    model.n_classes = detail::json_int(j, "n_classes", "model");
    if (!j.contains("layers") || !j["layers"].is_array()) {
        throw std::invalid_argument("model: missing 'layers' array");
    }

    std::size_t index = 0;
    for (const auto& lj : j["layers"]) {
        const std::string context = "model layer " + std::to_string(index);
        Layer layer;
        const std::string kind = detail::json_str(lj, "kind", context);
        auto load_params = [&](std::vector<std::size_t> w_shape) {
            std::vector<double> w = detail::reals_from_json(lj["weights"], context + " weights");
            std::vector<double> b = detail::reals_from_json(lj["bias"], context + " bias");
            std::size_t w_count = 1;
            for (std::size_t d : w_shape) w_count *= d;
            if (w.size() != w_count ||
                b.size() != static_cast<std::size_t>(layer.spec.out_features)) {
                throw std::invalid_argument(context +
                                            ": parameter count does not match layer dims");
            }
            layer.weights = Tensor(std::move(w_shape), std::move(w));
            layer.bias = Tensor({static_cast<std::size_t>(layer.spec.out_features)},
                                std::move(b));
        };
        if (kind == "temporal-conv") {
            layer.spec.kind = LayerKind::temporal_conv;
            layer.spec.kernel_length = detail::json_int(lj, "kernel_length", context);
            layer.spec.in_features = detail::json_int(lj, "in_features", context);
            layer.spec.out_features = detail::json_int(lj, "out_features", context);
            if (!lj.contains("weights") || !lj.contains("bias")) {
                throw std::invalid_argument(context + ": missing parameters");
            }
            load_params({static_cast<std::size_t>(layer.spec.out_features),
                         static_cast<std::size_t>(layer.spec.in_features),
                         static_cast<std::size_t>(layer.spec.kernel_length)});
        } else if (kind == "spatiotemporal-conv") {
            layer.spec.kind = LayerKind::spatiotemporal_conv;
            layer.spec.kernel_length = detail::json_int(lj, "kernel_length", context);
            layer.spec.kernel_channels = detail::json_int(lj, "kernel_channels", context);
            layer.spec.in_features = detail::json_int(lj, "in_features", context);
            layer.spec.out_features = detail::json_int(lj, "out_features", context);
            if (!lj.contains("weights") || !lj.contains("bias")) {
                throw std::invalid_argument(context + ": missing parameters");
            }
            load_params({static_cast<std::size_t>(layer.spec.out_features),
                         static_cast<std::size_t>(layer.spec.kernel_channels),
                         static_cast<std::size_t>(layer.spec.in_features),
                         static_cast<std::size_t>(layer.spec.kernel_length)});
        } else if (kind == "activation") {
            layer.spec.kind = LayerKind::activation;
            const std::string act = detail::json_str(lj, "activation", context);
            if (act == "tanh") {
                layer.spec.activation = ActivationKind::tanh;
            } else if (act == "relu") {
                layer.spec.activation = ActivationKind::relu;
            } else {
                throw std::invalid_argument(context + ": unknown activation '" + act + "'");
            }
        } else if (kind == "average-pool") {
            layer.spec.kind = LayerKind::average_pool;
            layer.spec.pool_window = detail::json_int(lj, "pool_window", context);
        } else if (kind == "dense") {
            layer.spec.kind = LayerKind::dense;
            layer.spec.in_features = detail::json_int(lj, "in_features", context);
            layer.spec.out_features = detail::json_int(lj, "out_features", context);
            if (!lj.contains("weights") || !lj.contains("bias")) {
                throw std::invalid_argument(context + ": missing parameters");
            }
            load_params({static_cast<std::size_t>(layer.spec.out_features),
                         static_cast<std::size_t>(layer.spec.in_features)});
        } else {
            throw std::invalid_argument(context + ": unknown layer kind '" + kind + "'");
        }
        model.layers.push_back(std::move(layer));
        ++index;
    }
    validate_model(model);
    return model;
}

inline void save_model(const Model& model, const std::string& path) {
    write_text_file(path, model_to_json(model));
}

inline Model load_model(const std::string& path) {
    try {
        return model_from_json(read_text_file(path));
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

}  // namespace attribkit
