#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "attribkit/record.hpp"
#include "attribkit/rng.hpp"
#include "attribkit/tensor.hpp"

namespace attribkit {

enum class LayerKind { temporal_conv, spatiotemporal_conv, activation, average_pool, dense };
enum class ActivationKind { tanh, relu };
enum class Architecture { temporal, spatiotemporal };

inline std::string to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::temporal_conv: return "temporal-conv";
        case LayerKind::spatiotemporal_conv: return "spatiotemporal-conv";
        case LayerKind::activation: return "activation";
        case LayerKind::average_pool: return "average-pool";
        case LayerKind::dense: return "dense";
    }
    return "?";
}

inline std::string to_string(ActivationKind kind) {
    return kind == ActivationKind::tanh ? "tanh" : "relu";
}

inline std::string to_string(Architecture arch) {
    return arch == Architecture::temporal ? "temporal" : "spatiotemporal";
}

struct LayerSpec {
    LayerKind kind = LayerKind::dense;
    int kernel_length = 0;    // conv
    int kernel_channels = 0;  // spatiotemporal conv only, >= 2
    int in_features = 0;      // conv: filters per group in; dense: flattened input size
    int out_features = 0;     // conv: filters out; dense: outputs
    ActivationKind activation = ActivationKind::tanh;
    int pool_window = 0;
};

struct Layer {
    LayerSpec spec;
    Tensor weights;  // temporal conv [out, in, k]; spatio conv [out, h, in, k]; dense [out, in]
    Tensor bias;     // [out]
};

// Activations between layers have shape [groups, features, time]. A temporal
// model keeps groups == n_channels until the dense head; a spatiotemporal
// conv collapses groups by sliding its kernel across them.
struct Shape3 {
    int groups = 0;
    int features = 0;
    int time = 0;
    int count() const { return groups * features * time; }
    bool operator==(const Shape3&) const = default;
};

struct Model {
    Architecture architecture = Architecture::temporal;
    int n_channels = 0;
    int input_length = 0;
    int n_classes = 0;
    std::vector<Layer> layers;
};

inline Shape3 layer_output_shape(const LayerSpec& spec, Shape3 in, const std::string& context) {
    switch (spec.kind) {
        case LayerKind::temporal_conv: {
            if (spec.in_features != in.features) {
                throw std::invalid_argument(context + ": temporal-conv expects " +
                                            std::to_string(spec.in_features) + " input features, got " +
                                            std::to_string(in.features));
            }
            if (spec.kernel_length < 1 || spec.kernel_length > in.time) {
                throw std::invalid_argument(context + ": kernel_length " +
                                            std::to_string(spec.kernel_length) +
                                            " does not fit time axis " + std::to_string(in.time));
            }
            return {in.groups, spec.out_features, in.time - spec.kernel_length + 1};
        }
        case LayerKind::spatiotemporal_conv: {
            if (spec.in_features != in.features) {
                throw std::invalid_argument(context + ": spatiotemporal-conv expects " +
                                            std::to_string(spec.in_features) +
                                            " input features, got " + std::to_string(in.features));
            }
            if (spec.kernel_channels < 2 || spec.kernel_channels > in.groups) {
                throw std::invalid_argument(context + ": kernel_channels " +
                                            std::to_string(spec.kernel_channels) +
                                            " must be in [2, " + std::to_string(in.groups) + "]");
            }
            if (spec.kernel_length < 1 || spec.kernel_length > in.time) {
                throw std::invalid_argument(context + ": kernel_length " +
                                            std::to_string(spec.kernel_length) +
                                            " does not fit time axis " + std::to_string(in.time));
            }
            return {in.groups - spec.kernel_channels + 1, spec.out_features,
                    in.time - spec.kernel_length + 1};
        }
        case LayerKind::activation:
            return in;
        case LayerKind::average_pool: {
            if (spec.pool_window < 1 || spec.pool_window > in.time) {
                throw std::invalid_argument(context + ": pool_window " +
                                            std::to_string(spec.pool_window) +
                                            " does not fit time axis " + std::to_string(in.time));
            }
            return {in.groups, in.features, in.time / spec.pool_window};
        }
        case LayerKind::dense: {
            if (spec.in_features != in.count()) {
                throw std::invalid_argument(context + ": dense expects " +
                                            std::to_string(spec.in_features) + " inputs, got " +
                                            std::to_string(in.count()));
            }
            return {1, 1, spec.out_features};
        }
    }
    throw std::invalid_argument(context + ": unknown layer kind");
}

// Shapes of the input (index 0) and of every layer's output (index i + 1).
inline std::vector<Shape3> activation_shapes(const Model& model) {
    std::vector<Shape3> shapes;
    shapes.reserve(model.layers.size() + 1);
    Shape3 cur{model.n_channels, 1, model.input_length};
    shapes.push_back(cur);
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        cur = layer_output_shape(model.layers[i].spec, cur, "layer " + std::to_string(i));
        shapes.push_back(cur);
    }
    return shapes;
}

inline void validate_model(const Model& model) {
    if (model.n_channels < 1 || model.input_length < 1 || model.n_classes < 1) {
        throw std::invalid_argument("model: n_channels, input_length and n_classes must be >= 1");
    }
    if (model.layers.empty() || model.layers.back().spec.kind != LayerKind::dense) {
        throw std::invalid_argument("model: final layer must be dense");
    }
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const Layer& layer = model.layers[i];
        const std::string context = "layer " + std::to_string(i);
        if (layer.spec.kind == LayerKind::dense && i + 1 != model.layers.size()) {
            throw std::invalid_argument(context + ": dense is only supported as the final layer");
        }
        if (model.architecture == Architecture::temporal &&
            layer.spec.kind == LayerKind::spatiotemporal_conv) {
            throw std::invalid_argument(context +
                                        ": temporal architecture cannot contain a "
                                        "spatiotemporal-conv layer");
        }
        std::vector<std::size_t> expect_w;
        switch (layer.spec.kind) {
            case LayerKind::temporal_conv:
                expect_w = {static_cast<std::size_t>(layer.spec.out_features),
                            static_cast<std::size_t>(layer.spec.in_features),
                            static_cast<std::size_t>(layer.spec.kernel_length)};
                break;
            case LayerKind::spatiotemporal_conv:
                expect_w = {static_cast<std::size_t>(layer.spec.out_features),
                            static_cast<std::size_t>(layer.spec.kernel_channels),
                            static_cast<std::size_t>(layer.spec.in_features),
                            static_cast<std::size_t>(layer.spec.kernel_length)};
                break;
            case LayerKind::dense:
                expect_w = {static_cast<std::size_t>(layer.spec.out_features),
                            static_cast<std::size_t>(layer.spec.in_features)};
                break;
            default:
                break;
        }
        if (!expect_w.empty()) {
            if (layer.weights.shape() != expect_w) {
                throw std::invalid_argument(context + ": weights shape " +
                                            layer.weights.shape_string() +
                                            " does not match layer spec");
            }
            if (layer.bias.shape() !=
                std::vector<std::size_t>{static_cast<std::size_t>(layer.spec.out_features)}) {
                throw std::invalid_argument(context + ": bias shape " + layer.bias.shape_string() +
                                            " does not match out_features");
            }
            if (!layer.weights.all_finite() || !layer.bias.all_finite()) {
                throw std::invalid_argument(context + ": non-finite parameter value");
            }
        }
    }
    const Shape3 out = activation_shapes(model).back();
    if (out.time != model.n_classes) {
        throw std::invalid_argument("model: final dense produces " + std::to_string(out.time) +
                                    " outputs, expected n_classes = " +
                                    std::to_string(model.n_classes));
    }
}

namespace detail {

// Per-call scratch holding every layer's output; layout [groups, features,
// time] flattened. Reused across calls by the hot loops in the attribution
// code; forward passes never share one workspace between threads.
struct Workspace {
    std::vector<Tensor> acts;  // acts[0] = input, acts[i + 1] = output of layer i
};

inline void ensure_workspace(const Model& model, const std::vector<Shape3>& shapes,
                             Workspace& ws) {
    if (ws.acts.size() == shapes.size()) return;
    ws.acts.clear();
    ws.acts.reserve(shapes.size());
    for (const Shape3& s : shapes) {
        ws.acts.emplace_back(Tensor({static_cast<std::size_t>(s.count())}));
    }
    (void)model;
}

inline void temporal_conv_forward(const Layer& layer, const Shape3 in_s, const double* in,
                                  const Shape3 out_s, double* out) {
    const int fi_n = layer.spec.in_features;
    const int fo_n = layer.spec.out_features;
    const int k_n = layer.spec.kernel_length;
    const int t_in = in_s.time;
    const int t_out = out_s.time;
    const double* w = layer.weights.data();
    const double* b = layer.bias.data();
    for (int g = 0; g < in_s.groups; ++g) {
        const double* in_g = in + static_cast<std::size_t>(g) * fi_n * t_in;
        double* out_g = out + static_cast<std::size_t>(g) * fo_n * t_out;
        for (int fo = 0; fo < fo_n; ++fo) {
            double* out_row = out_g + static_cast<std::size_t>(fo) * t_out;
            const double bias = b[fo];
            for (int t = 0; t < t_out; ++t) out_row[t] = bias;
            for (int fi = 0; fi < fi_n; ++fi) {
                const double* in_row = in_g + static_cast<std::size_t>(fi) * t_in;
                const double* w_row = w + (static_cast<std::size_t>(fo) * fi_n + fi) * k_n;
                for (int k = 0; k < k_n; ++k) {
                    const double wk = w_row[k];
                    for (int t = 0; t < t_out; ++t) out_row[t] += wk * in_row[t + k];
                }
            }
        }
    }
}

inline void spatiotemporal_conv_forward(const Layer& layer, const Shape3 in_s, const double* in,
                                        const Shape3 out_s, double* out) {
    const int fi_n = layer.spec.in_features;
    const int fo_n = layer.spec.out_features;
    const int k_n = layer.spec.kernel_length;
    const int h_n = layer.spec.kernel_channels;
    const int t_in = in_s.time;
    const int t_out = out_s.time;
    const double* w = layer.weights.data();
    const double* b = layer.bias.data();
    for (int go = 0; go < out_s.groups; ++go) {
        double* out_g = out + static_cast<std::size_t>(go) * fo_n * t_out;
        for (int fo = 0; fo < fo_n; ++fo) {
            double* out_row = out_g + static_cast<std::size_t>(fo) * t_out;
            const double bias = b[fo];
            for (int t = 0; t < t_out; ++t) out_row[t] = bias;
            for (int h = 0; h < h_n; ++h) {
                const double* in_g = in + static_cast<std::size_t>(go + h) * fi_n * t_in;
                for (int fi = 0; fi < fi_n; ++fi) {
                    const double* in_row = in_g + static_cast<std::size_t>(fi) * t_in;
                    const double* w_row =
                        w + ((static_cast<std::size_t>(fo) * h_n + h) * fi_n + fi) * k_n;
                    for (int k = 0; k < k_n; ++k) {
                        const double wk = w_row[k];
                        for (int t = 0; t < t_out; ++t) out_row[t] += wk * in_row[t + k];
                    }
                }
            }
        }
    }
}

inline const Tensor& forward_pass(const Model& model, const Tensor& input,
                                  const std::vector<Shape3>& shapes, Workspace& ws) {
    ensure_workspace(model, shapes, ws);
    {
        const std::size_t n = input.size();
        double* dst = ws.acts[0].data();
        const double* src = input.data();
        for (std::size_t i = 0; i < n; ++i) dst[i] = src[i];
    }
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        const Layer& layer = model.layers[li];
        const Shape3 in_s = shapes[li];
        const Shape3 out_s = shapes[li + 1];
        const double* in = ws.acts[li].data();
        double* out = ws.acts[li + 1].data();
        switch (layer.spec.kind) {
            case LayerKind::temporal_conv:
                temporal_conv_forward(layer, in_s, in, out_s, out);
                break;
            case LayerKind::spatiotemporal_conv:
                spatiotemporal_conv_forward(layer, in_s, in, out_s, out);
                break;
            case LayerKind::activation: {
                const int n = in_s.count();
                if (layer.spec.activation == ActivationKind::tanh) {
                    for (int i = 0; i < n; ++i) out[i] = std::tanh(in[i]);
                } else {
                    for (int i = 0; i < n; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
                }
                break;
            }
            case LayerKind::average_pool: {
                const int p = layer.spec.pool_window;
                const double inv = 1.0 / p;
                const int rows = in_s.groups * in_s.features;
                for (int r = 0; r < rows; ++r) {
                    const double* in_row = in + static_cast<std::size_t>(r) * in_s.time;
                    double* out_row = out + static_cast<std::size_t>(r) * out_s.time;
                    for (int t = 0; t < out_s.time; ++t) {
                        double acc = 0.0;
                        const double* win = in_row + static_cast<std::size_t>(t) * p;
                        for (int j = 0; j < p; ++j) acc += win[j];
                        out_row[t] = acc * inv;
                    }
                }
                break;
            }
            case LayerKind::dense: {
                const int n_in = layer.spec.in_features;
                const int n_out = layer.spec.out_features;
                const double* w = layer.weights.data();
                const double* b = layer.bias.data();
                for (int o = 0; o < n_out; ++o) {
                    const double* w_row = w + static_cast<std::size_t>(o) * n_in;
                    double acc = b[o];
                    for (int i = 0; i < n_in; ++i) acc += w_row[i] * in[i];
                    out[o] = acc;
                }
                break;
            }
        }
    }
    return ws.acts.back();
}

struct ParamGrads {
    std::vector<Tensor> weights;
    std::vector<Tensor> bias;
};

inline void init_param_grads(const Model& model, ParamGrads& pg) {
    pg.weights.clear();
    pg.bias.clear();
    for (const Layer& layer : model.layers) {
        pg.weights.push_back(Tensor::zeros_like(layer.weights));
        pg.bias.push_back(Tensor::zeros_like(layer.bias));
    }
}

// Reverse pass from d(objective)/d(logits). Fills input_grad (same flat size
// as the input) when non-null; accumulates into pg when non-null. forward_pass
// must have been run on the same workspace first.
inline void backward_pass(const Model& model, const std::vector<Shape3>& shapes, Workspace& ws,
                          const std::vector<double>& dlogits, Tensor* input_grad,
                          ParamGrads* pg) {
    const std::size_t n_layers = model.layers.size();
    // two ping-pong buffers sized to the largest activation
    std::size_t max_count = 0;
    for (const Shape3& s : shapes) {
        max_count = std::max(max_count, static_cast<std::size_t>(s.count()));
    }
    std::vector<double> buf_a(max_count, 0.0), buf_b(max_count, 0.0);
    double* dout = buf_a.data();
    double* din = buf_b.data();
    for (std::size_t i = 0; i < dlogits.size(); ++i) dout[i] = dlogits[i];

    for (std::size_t li = n_layers; li-- > 0;) {
        const Layer& layer = model.layers[li];
        const Shape3 in_s = shapes[li];
        const Shape3 out_s = shapes[li + 1];
        const double* in = ws.acts[li].data();
        const double* out = ws.acts[li + 1].data();
        const int in_count = in_s.count();
        for (int i = 0; i < in_count; ++i) din[i] = 0.0;

        switch (layer.spec.kind) {
            case LayerKind::temporal_conv: {
                const int fi_n = layer.spec.in_features;
                const int fo_n = layer.spec.out_features;
                const int k_n = layer.spec.kernel_length;
                const int t_in = in_s.time;
                const int t_out = out_s.time;
                const double* w = layer.weights.data();
                double* dw = pg ? pg->weights[li].data() : nullptr;
                double* db = pg ? pg->bias[li].data() : nullptr;
                for (int g = 0; g < in_s.groups; ++g) {
                    const double* in_g = in + static_cast<std::size_t>(g) * fi_n * t_in;
                    double* din_g = din + static_cast<std::size_t>(g) * fi_n * t_in;
                    const double* dout_g = dout + static_cast<std::size_t>(g) * fo_n * t_out;
                    for (int fo = 0; fo < fo_n; ++fo) {
                        const double* dout_row = dout_g + static_cast<std::size_t>(fo) * t_out;
                        if (db) {
                            double acc = 0.0;
                            for (int t = 0; t < t_out; ++t) acc += dout_row[t];
                            db[fo] += acc;
                        }
                        for (int fi = 0; fi < fi_n; ++fi) {
                            const double* in_row = in_g + static_cast<std::size_t>(fi) * t_in;
                            double* din_row = din_g + static_cast<std::size_t>(fi) * t_in;
                            const std::size_t w_off =
                                (static_cast<std::size_t>(fo) * fi_n + fi) * k_n;
                            const double* w_row = w + w_off;
                            for (int k = 0; k < k_n; ++k) {
                                const double wk = w_row[k];
                                double acc = 0.0;
                                for (int t = 0; t < t_out; ++t) {
                                    din_row[t + k] += wk * dout_row[t];
                                    acc += dout_row[t] * in_row[t + k];
                                }
                                if (dw) dw[w_off + k] += acc;
                            }
                        }
                    }
                }
                break;
            }
            case LayerKind::spatiotemporal_conv: {
                const int fi_n = layer.spec.in_features;
                const int fo_n = layer.spec.out_features;
                const int k_n = layer.spec.kernel_length;
                const int h_n = layer.spec.kernel_channels;
                const int t_in = in_s.time;
                const int t_out = out_s.time;
                const double* w = layer.weights.data();
                double* dw = pg ? pg->weights[li].data() : nullptr;
                double* db = pg ? pg->bias[li].data() : nullptr;
                for (int go = 0; go < out_s.groups; ++go) {
                    const double* dout_g = dout + static_cast<std::size_t>(go) * fo_n * t_out;
                    for (int fo = 0; fo < fo_n; ++fo) {
                        const double* dout_row = dout_g + static_cast<std::size_t>(fo) * t_out;
                        if (db) {
                            double acc = 0.0;
                            for (int t = 0; t < t_out; ++t) acc += dout_row[t];
                            db[fo] += acc;
                        }
                        for (int h = 0; h < h_n; ++h) {
                            const double* in_g =
                                in + static_cast<std::size_t>(go + h) * fi_n * t_in;
                            double* din_g = din + static_cast<std::size_t>(go + h) * fi_n * t_in;
                            for (int fi = 0; fi < fi_n; ++fi) {
                                const double* in_row = in_g + static_cast<std::size_t>(fi) * t_in;
                                double* din_row = din_g + static_cast<std::size_t>(fi) * t_in;
                                const std::size_t w_off =
                                    ((static_cast<std::size_t>(fo) * h_n + h) * fi_n + fi) * k_n;
                                const double* w_row = w + w_off;
                                for (int k = 0; k < k_n; ++k) {
                                    const double wk = w_row[k];
                                    double acc = 0.0;
                                    for (int t = 0; t < t_out; ++t) {
                                        din_row[t + k] += wk * dout_row[t];
                                        acc += dout_row[t] * in_row[t + k];
                                    }
                                    if (dw) dw[w_off + k] += acc;
                                }
                            }
                        }
                    }
                }
                break;
            }
            case LayerKind::activation: {
                const int n = in_s.count();
                if (layer.spec.activation == ActivationKind::tanh) {
                    for (int i = 0; i < n; ++i) din[i] = dout[i] * (1.0 - out[i] * out[i]);
                } else {
                    // relu subgradient 0 at the kink
                    for (int i = 0; i < n; ++i) din[i] = in[i] > 0.0 ? dout[i] : 0.0;
                }
                break;
            }
            case LayerKind::average_pool: {
                const int p = layer.spec.pool_window;
                const double inv = 1.0 / p;
                const int rows = in_s.groups * in_s.features;
                for (int r = 0; r < rows; ++r) {
                    double* din_row = din + static_cast<std::size_t>(r) * in_s.time;
                    const double* dout_row = dout + static_cast<std::size_t>(r) * out_s.time;
                    for (int t = 0; t < out_s.time; ++t) {
                        const double v = dout_row[t] * inv;
                        double* win = din_row + static_cast<std::size_t>(t) * p;
                        for (int j = 0; j < p; ++j) win[j] = v;
                    }
                }
                break;
            }
            case LayerKind::dense: {
                const int n_in = layer.spec.in_features;
                const int n_out = layer.spec.out_features;
                const double* w = layer.weights.data();
                double* dw = pg ? pg->weights[li].data() : nullptr;
                double* db = pg ? pg->bias[li].data() : nullptr;
                for (int o = 0; o < n_out; ++o) {
                    const double g = dout[o];
                    if (g == 0.0 && !pg) continue;
                    const double* w_row = w + static_cast<std::size_t>(o) * n_in;
                    for (int i = 0; i < n_in; ++i) din[i] += g * w_row[i];
                    if (dw) {
                        double* dw_row = dw + static_cast<std::size_t>(o) * n_in;
                        for (int i = 0; i < n_in; ++i) dw_row[i] += g * in[i];
                    }
                    if (db) db[o] += g;
                }
                break;
            }
        }
        std::swap(dout, din);
    }
    if (input_grad) {
        double* dst = input_grad->data();
        const std::size_t n = input_grad->size();
        for (std::size_t i = 0; i < n; ++i) dst[i] = dout[i];
    }
}

inline void require_input_shape(const Model& model, const Tensor& input,
                                const std::string& context) {
    if (input.rank() != 2 || static_cast<int>(input.dim(0)) != model.n_channels ||
        static_cast<int>(input.dim(1)) != model.input_length) {
        throw std::invalid_argument(context + ": input shape " + input.shape_string() +
                                    " does not match model input [" +
                                    std::to_string(model.n_channels) + ", " +
                                    std::to_string(model.input_length) + "]");
    }
}

inline void require_class_index(const Model& model, int class_index, const std::string& context) {
    if (class_index < 0 || class_index >= model.n_classes) {
        throw std::invalid_argument(context + ": class_index " + std::to_string(class_index) +
                                    " out of range [0, " + std::to_string(model.n_classes) + ")");
    }
}

}  // namespace detail

struct Gradient {
    Tensor values;  // [n_channels, length], entry (i, k) = d f_c / d z_ik
};

inline std::vector<double> forward_logits(const Model& model, const Record& record) {
    detail::require_input_shape(model, record.values, "forward");
    const std::vector<Shape3> shapes = activation_shapes(model);
    detail::Workspace ws;
    const Tensor& out = detail::forward_pass(model, record.values, shapes, ws);
    return std::vector<double>(out.data(), out.data() + out.size());
}

inline double forward(const Model& model, const Record& record, int class_index) {
    detail::require_class_index(model, class_index, "forward");
    return forward_logits(model, record)[class_index];
}

inline Gradient input_gradient(const Model& model, const Record& record, int class_index) {
    detail::require_input_shape(model, record.values, "input_gradient");
    detail::require_class_index(model, class_index, "input_gradient");
    const std::vector<Shape3> shapes = activation_shapes(model);
    detail::Workspace ws;
    detail::forward_pass(model, record.values, shapes, ws);
    std::vector<double> dlogits(model.n_classes, 0.0);
    dlogits[class_index] = 1.0;
    Gradient grad;
    grad.values = Tensor({static_cast<std::size_t>(model.n_channels),
                          static_cast<std::size_t>(model.input_length)});
    detail::backward_pass(model, shapes, ws, dlogits, &grad.values, nullptr);
    return grad;
}

// --- construction -----------------------------------------------------------

inline Tensor init_uniform(std::vector<std::size_t> shape, int fan_in, Rng& rng) {
    Tensor t(std::move(shape));
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
    return t;
}

struct ConvStage {
    int filters = 4;
    int kernel = 3;
};

// Default desk-scale temporal network:
// conv(k=5, 4 filters) -> tanh -> average-pool(2) -> conv(k=3, 4 filters)
// -> tanh -> global average -> dense. One kernel bank is applied to every
// channel, so all layers before the dense head are weight-shared.
inline Model make_temporal_model(int n_channels, int input_length, int n_classes,
                                 std::uint64_t seed, ConvStage stage1 = {4, 5},
                                 ConvStage stage2 = {4, 3}, int pool = 2) {
    Rng rng(Rng::mix(seed, 0x7e3a));
    Model model;
    model.architecture = Architecture::temporal;
    model.n_channels = n_channels;
    model.input_length = input_length;
    model.n_classes = n_classes;

    Shape3 cur{n_channels, 1, input_length};
    auto push = [&](Layer layer) {
        cur = layer_output_shape(layer.spec, cur, "builder");
        model.layers.push_back(std::move(layer));
    };

    Layer conv1;
    conv1.spec = {LayerKind::temporal_conv, stage1.kernel, 0, 1, stage1.filters,
                  ActivationKind::tanh, 0};
    conv1.weights = init_uniform({static_cast<std::size_t>(stage1.filters), 1,
                                  static_cast<std::size_t>(stage1.kernel)},
                                 stage1.kernel, rng);
    conv1.bias = Tensor({static_cast<std::size_t>(stage1.filters)});
    push(std::move(conv1));

    push({{LayerKind::activation, 0, 0, 0, 0, ActivationKind::tanh, 0}, Tensor(), Tensor()});
    push({{LayerKind::average_pool, 0, 0, 0, 0, ActivationKind::tanh, pool}, Tensor(), Tensor()});

    Layer conv2;
    conv2.spec = {LayerKind::temporal_conv, stage2.kernel, 0, stage1.filters, stage2.filters,
                  ActivationKind::tanh, 0};
    conv2.weights = init_uniform({static_cast<std::size_t>(stage2.filters),
                                  static_cast<std::size_t>(stage1.filters),
                                  static_cast<std::size_t>(stage2.kernel)},
                                 stage1.filters * stage2.kernel, rng);
    conv2.bias = Tensor({static_cast<std::size_t>(stage2.filters)});
    push(std::move(conv2));

    push({{LayerKind::activation, 0, 0, 0, 0, ActivationKind::tanh, 0}, Tensor(), Tensor()});
    push({{LayerKind::average_pool, 0, 0, 0, 0, ActivationKind::tanh, cur.time}, Tensor(),
          Tensor()});

    Layer head;
    head.spec = {LayerKind::dense, 0, 0, cur.count(), n_classes, ActivationKind::tanh, 0};
    head.weights = init_uniform({static_cast<std::size_t>(n_classes),
                                 static_cast<std::size_t>(cur.count())},
                                cur.count(), rng);
    head.bias = Tensor({static_cast<std::size_t>(n_classes)});
    push(std::move(head));

    validate_model(model);
    return model;
}

// Spatiotemporal variant: the first stage is a 2-D conv spanning all input
// channels, which deliberately breaks channel independence.
inline Model make_spatiotemporal_model(int n_channels, int input_length, int n_classes,
                                       std::uint64_t seed, ConvStage stage1 = {4, 5},
                                       ConvStage stage2 = {4, 3}, int pool = 2) {
    Rng rng(Rng::mix(seed, 0x51a9));
    Model model;
    model.architecture = Architecture::spatiotemporal;
    model.n_channels = n_channels;
    model.input_length = input_length;
    model.n_classes = n_classes;

    Shape3 cur{n_channels, 1, input_length};
    auto push = [&](Layer layer) {
        cur = layer_output_shape(layer.spec, cur, "builder");
        model.layers.push_back(std::move(layer));
    };

    Layer conv1;
    conv1.spec = {LayerKind::spatiotemporal_conv, stage1.kernel, n_channels, 1, stage1.filters,
                  ActivationKind::tanh, 0};
    conv1.weights = init_uniform({static_cast<std::size_t>(stage1.filters),
                                  static_cast<std::size_t>(n_channels), 1,
                                  static_cast<std::size_t>(stage1.kernel)},
                                 n_channels * stage1.kernel, rng);
    conv1.bias = Tensor({static_cast<std::size_t>(stage1.filters)});
    push(std::move(conv1));

    push({{LayerKind::activation, 0, 0, 0, 0, ActivationKind::tanh, 0}, Tensor(), Tensor()});
    push({{LayerKind::average_pool, 0, 0, 0, 0, ActivationKind::tanh, pool}, Tensor(), Tensor()});

    Layer conv2;
    conv2.spec = {LayerKind::temporal_conv, stage2.kernel, 0, stage1.filters, stage2.filters,
                  ActivationKind::tanh, 0};
    conv2.weights = init_uniform({static_cast<std::size_t>(stage2.filters),
                                  static_cast<std::size_t>(stage1.filters),
                                  static_cast<std::size_t>(stage2.kernel)},
                                 stage1.filters * stage2.kernel, rng);
    conv2.bias = Tensor({static_cast<std::size_t>(stage2.filters)});
    push(std::move(conv2));

    push({{LayerKind::activation, 0, 0, 0, 0, ActivationKind::tanh, 0}, Tensor(), Tensor()});
    push({{LayerKind::average_pool, 0, 0, 0, 0, ActivationKind::tanh, cur.time}, Tensor(),
          Tensor()});

    Layer head;
    head.spec = {LayerKind::dense, 0, 0, cur.count(), n_classes, ActivationKind::tanh, 0};
    head.weights = init_uniform({static_cast<std::size_t>(n_classes),
                                 static_cast<std::size_t>(cur.count())},
                                cur.count(), rng);
    head.bias = Tensor({static_cast<std::size_t>(n_classes)});
    push(std::move(head));

    validate_model(model);
    return model;
}

// One dense layer reading the flattened record; weights is [n_classes x (C*L)].
inline Model make_dense_model(int n_channels, int input_length, int n_classes,
                              std::vector<double> weights, std::vector<double> bias) {
    Model model;
    model.architecture = Architecture::temporal;
    model.n_channels = n_channels;
    model.input_length = input_length;
    model.n_classes = n_classes;
    const std::size_t n_in = static_cast<std::size_t>(n_channels) * input_length;
    Layer head;
    head.spec = {LayerKind::dense, 0, 0, static_cast<int>(n_in), n_classes, ActivationKind::tanh,
                 0};
    head.weights = Tensor({static_cast<std::size_t>(n_classes), n_in}, std::move(weights));
    head.bias = Tensor({static_cast<std::size_t>(n_classes)}, std::move(bias));
    model.layers.push_back(std::move(head));
    validate_model(model);
    return model;
}

// --- model surgery (used by the axiom checks) --------------------------------

// Makes channel `channel` structurally ignored. Temporal models: zero the
// dense columns reading that group. Spatiotemporal models: additionally
// requires the first conv to span all channels so the channel maps to one
// kernel slice.
inline void zero_channel_weights(Model& model, int channel) {
    if (channel < 0 || channel >= model.n_channels) {
        throw std::invalid_argument("zero_channel_weights: channel out of range");
    }
    const std::vector<Shape3> shapes = activation_shapes(model);
    if (model.architecture == Architecture::temporal) {
        const std::size_t dense_index = model.layers.size() - 1;
        Layer& dense = model.layers[dense_index];
        const Shape3 in_s = shapes[dense_index];
        const int block = in_s.features * in_s.time;
        for (int o = 0; o < dense.spec.out_features; ++o) {
            for (int j = 0; j < block; ++j) {
                dense.weights[static_cast<std::size_t>(o) * dense.spec.in_features +
                              static_cast<std::size_t>(channel) * block + j] = 0.0;
            }
        }
        return;
    }
    Layer& conv = model.layers.front();
    if (conv.spec.kind != LayerKind::spatiotemporal_conv ||
        conv.spec.kernel_channels != model.n_channels) {
        throw std::invalid_argument(
            "zero_channel_weights: spatiotemporal model must start with a conv spanning all "
            "channels");
    }
    for (int fo = 0; fo < conv.spec.out_features; ++fo) {
        for (int fi = 0; fi < conv.spec.in_features; ++fi) {
            for (int k = 0; k < conv.spec.kernel_length; ++k) {
                conv.weights.at(fo, channel, fi, k) = 0.0;
            }
        }
    }
}

// Enforces W_pj = W_qj in the dense head of a temporal model: after this,
// exchanging equal-valued channels p and q leaves the function unchanged.
inline void tie_channel_dense_weights(Model& model, int p, int q) {
    if (model.architecture != Architecture::temporal) {
        throw std::invalid_argument("tie_channel_dense_weights: temporal models only");
    }
    if (p < 0 || q < 0 || p >= model.n_channels || q >= model.n_channels || p == q) {
        throw std::invalid_argument("tie_channel_dense_weights: bad channel pair");
    }
    const std::vector<Shape3> shapes = activation_shapes(model);
    const std::size_t dense_index = model.layers.size() - 1;
    Layer& dense = model.layers[dense_index];
    const Shape3 in_s = shapes[dense_index];
    const int block = in_s.features * in_s.time;
    for (int o = 0; o < dense.spec.out_features; ++o) {
        double* row = dense.weights.data() + static_cast<std::size_t>(o) * dense.spec.in_features;
        for (int j = 0; j < block; ++j) {
            row[static_cast<std::size_t>(q) * block + j] =
                row[static_cast<std::size_t>(p) * block + j];
        }
    }
}

// Functionally equivalent reimplementation: permutes the filters of the last
// conv layer and relabels the dense columns to match.
inline Model permute_hidden_units(const Model& model, std::uint64_t seed) {
    int conv_index = -1;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const LayerKind kind = model.layers[i].spec.kind;
        if (kind == LayerKind::temporal_conv || kind == LayerKind::spatiotemporal_conv) {
            conv_index = static_cast<int>(i);
        }
    }
    if (conv_index < 0) {
        throw std::invalid_argument("permute_hidden_units: model has no conv layer");
    }
    const std::vector<Shape3> shapes = activation_shapes(model);
    Model out = model;
    Layer& conv = out.layers[conv_index];
    const int filters = conv.spec.out_features;
    Rng rng(Rng::mix(seed, 0xfeed));
    const std::vector<int> perm = rng.permutation(filters);

    const Tensor old_w = conv.weights;
    const Tensor old_b = conv.bias;
    const std::size_t row = conv.weights.size() / filters;
    for (int f = 0; f < filters; ++f) {
        for (std::size_t j = 0; j < row; ++j) {
            conv.weights[static_cast<std::size_t>(perm[f]) * row + j] =
                old_w[static_cast<std::size_t>(f) * row + j];
        }
        conv.bias[perm[f]] = old_b[f];
    }

    const std::size_t dense_index = out.layers.size() - 1;
    Layer& dense = out.layers[dense_index];
    const Shape3 in_s = shapes[dense_index];
    const Tensor old_dense = dense.weights;
    for (int o = 0; o < dense.spec.out_features; ++o) {
        for (int g = 0; g < in_s.groups; ++g) {
            for (int f = 0; f < in_s.features; ++f) {
                for (int t = 0; t < in_s.time; ++t) {
                    const std::size_t src =
                        static_cast<std::size_t>(o) * dense.spec.in_features +
                        (static_cast<std::size_t>(g) * in_s.features + f) * in_s.time + t;
                    const std::size_t dst =
                        static_cast<std::size_t>(o) * dense.spec.in_features +
                        (static_cast<std::size_t>(g) * in_s.features + perm[f]) * in_s.time + t;
                    dense.weights[dst] = old_dense[src];
                }
            }
        }
    }
    return out;
}

}  // namespace attribkit
