#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "attribkit/logit_function.hpp"
#include "attribkit/model.hpp"
#include "attribkit/parallel.hpp"
#include "attribkit/record.hpp"
#include "attribkit/rng.hpp"
#include "attribkit/tensor.hpp"

namespace attribkit {

enum class Method { ig, ss, exact_shapley, cig };
enum class Granularity { channel, timepoint };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::ig: return "ig";
        case Method::ss: return "ss";
        case Method::exact_shapley: return "exact_shapley";
        case Method::cig: return "cig";
    }
    return "?";
}

inline std::string to_string(Granularity g) {
    return g == Granularity::channel ? "channel" : "timepoint";
}

struct AttributionVector {
    std::vector<double> per_feature;
    Method method = Method::ig;
    int class_index = 0;
    Granularity granularity = Granularity::channel;
    std::string baseline_descriptor;
    long steps = 0;                      // ig, cig
    long samples = 0;                    // ss
    std::uint64_t seed = 0;              // ss
    std::vector<double> standard_error;  // ss only, empty otherwise
};

// Piecewise-linear integration path: baseline -> waypoints... -> record, with
// `steps` midpoint-rule evaluations per straight segment.
struct PathSpec {
    Tensor baseline;
    std::vector<Tensor> waypoints;
    int steps = 256;
};

struct SSConfig {
    int samples_per_feature = 500;
    std::vector<Record> background;
    std::uint64_t seed = 42;
    Granularity granularity = Granularity::channel;
    int threads = 0;
};

inline std::string describe_baseline(const Tensor& baseline) {
    for (std::size_t i = 0; i < baseline.size(); ++i) {
        if (baseline[i] != 0.0) return "custom";
    }
    return "zero";
}

inline Tensor zero_baseline(const Model& model) {
    return Tensor({static_cast<std::size_t>(model.n_channels),
                   static_cast<std::size_t>(model.input_length)});
}

namespace detail {

// Midpoint-rule IG over one straight segment, accumulated into acc (shape
// [C, L]). Steps are processed in fixed chunks and the chunk sums are reduced
// in index order, so the result is bit-identical for any thread count.
inline void accumulate_segment_ig(LogitFunction& f, const Tensor& from, const Tensor& to,
                                  int steps, int threads, Tensor& acc) {
    if (from == to) return;
    const std::size_t n = from.size();
    constexpr int kChunkSteps = 32;
    const std::size_t n_chunks =
        (static_cast<std::size_t>(steps) + kChunkSteps - 1) / kChunkSteps;
    std::vector<Tensor> chunk_sums(n_chunks);
    parallel_for(n_chunks, threads, [&](std::size_t c) {
        std::unique_ptr<LogitFunction> fn = f.clone();
        Tensor point = Tensor::zeros_like(from);
        Tensor grad = Tensor::zeros_like(from);
        Tensor sum = Tensor::zeros_like(from);
        const int begin = static_cast<int>(c) * kChunkSteps;
        const int end = std::min(steps, begin + kChunkSteps);
        const double* a = from.data();
        const double* b = to.data();
        for (int s = begin; s < end; ++s) {
            const double alpha = (s + 0.5) / static_cast<double>(steps);
            double* p = point.data();
            for (std::size_t i = 0; i < n; ++i) p[i] = a[i] + alpha * (b[i] - a[i]);
            fn->gradient(point, grad);
            double* dst = sum.data();
            const double* src = grad.data();
            for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
        }
        chunk_sums[c] = std::move(sum);
    });
    Tensor total = Tensor::zeros_like(from);
    for (const Tensor& cs : chunk_sums) {
        double* dst = total.data();
        const double* src = cs.data();
        for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
    }
    const double inv_m = 1.0 / static_cast<double>(steps);
    double* out = acc.data();
    const double* a = from.data();
    const double* b = to.data();
    const double* t = total.data();
    for (std::size_t i = 0; i < n; ++i) out[i] += (b[i] - a[i]) * t[i] * inv_m;
}

inline std::vector<double> collapse_to_granularity(const Tensor& timepoint_matrix,
                                                   Granularity granularity) {
    const std::size_t n_channels = timepoint_matrix.dim(0);
    const std::size_t length = timepoint_matrix.dim(1);
    if (granularity == Granularity::timepoint) {
        return std::vector<double>(timepoint_matrix.data(),
                                   timepoint_matrix.data() + timepoint_matrix.size());
    }
    std::vector<double> out(n_channels, 0.0);
    for (std::size_t c = 0; c < n_channels; ++c) {
        const double* row = timepoint_matrix.data() + c * length;
        double acc = 0.0;
        for (std::size_t t = 0; t < length; ++t) acc += row[t];
        out[c] = acc;
    }
    return out;
}

}  // namespace detail

inline AttributionVector integrated_gradients(LogitFunction& f, const Tensor& record,
                                              const Tensor& baseline, int steps,
                                              Granularity granularity = Granularity::channel,
                                              int threads = 0) {
    f.require_input(record, "integrated_gradients record");
    require_same_shape(record, baseline, "integrated_gradients baseline");
    if (steps < 1) throw std::invalid_argument("integrated_gradients: steps must be >= 1");
    Tensor matrix = Tensor::zeros_like(record);
    detail::accumulate_segment_ig(f, baseline, record, steps, threads, matrix);
    AttributionVector av;
    av.per_feature = detail::collapse_to_granularity(matrix, granularity);
    av.method = Method::ig;
    av.granularity = granularity;
    av.baseline_descriptor = describe_baseline(baseline);
    av.steps = steps;
    return av;
}

inline AttributionVector path_integrated_gradients(LogitFunction& f, const Tensor& record,
                                                   const PathSpec& path,
                                                   Granularity granularity = Granularity::channel,
                                                   int threads = 0) {
    f.require_input(record, "path_integrated_gradients record");
    require_same_shape(record, path.baseline, "path_integrated_gradients baseline");
    for (const Tensor& w : path.waypoints) {
        require_same_shape(record, w, "path_integrated_gradients waypoint");
    }
    if (path.steps < 1) {
        throw std::invalid_argument("path_integrated_gradients: steps must be >= 1");
    }
    Tensor matrix = Tensor::zeros_like(record);
    const Tensor* prev = &path.baseline;
    for (const Tensor& w : path.waypoints) {
        detail::accumulate_segment_ig(f, *prev, w, path.steps, threads, matrix);
        prev = &w;
    }
    detail::accumulate_segment_ig(f, *prev, record, path.steps, threads, matrix);
    AttributionVector av;
    av.per_feature = detail::collapse_to_granularity(matrix, granularity);
    av.method = Method::ig;
    av.granularity = granularity;
    av.baseline_descriptor = describe_baseline(path.baseline) +
                             (path.waypoints.empty()
                                  ? std::string()
                                  : "+" + std::to_string(path.waypoints.size()) + "-waypoints");
    av.steps = path.steps;
    return av;
}

inline AttributionVector shapley_sampling(LogitFunction& f, const Tensor& record,
                                          const SSConfig& config) {
    f.require_input(record, "shapley_sampling record");
    if (config.granularity != Granularity::channel) {
        throw std::invalid_argument(
            "shapley_sampling: timepoint granularity is only supported for integrated "
            "gradients");
    }
    if (config.background.empty()) {
        throw std::invalid_argument("shapley_sampling: background set is empty");
    }
    for (const Record& b : config.background) {
        require_same_shape(record, b.values, "shapley_sampling background '" + b.id + "'");
    }
    if (config.samples_per_feature < 1) {
        throw std::invalid_argument("shapley_sampling: samples_per_feature must be >= 1");
    }

    const int n = static_cast<int>(record.dim(0));
    const std::size_t length = record.dim(1);
    const std::size_t M = static_cast<std::size_t>(config.samples_per_feature);
    // marginals[i * M + s]: contribution of channel i in sample s's permutation walk
    std::vector<double> marginals(static_cast<std::size_t>(n) * M, 0.0);

    constexpr std::size_t kChunkSamples = 16;
    const std::size_t n_chunks = (M + kChunkSamples - 1) / kChunkSamples;
    parallel_for(n_chunks, config.threads, [&](std::size_t c) {
        std::unique_ptr<LogitFunction> fn = f.clone();
        Tensor z = Tensor::zeros_like(record);
        const std::size_t begin = c * kChunkSamples;
        const std::size_t end = std::min(M, begin + kChunkSamples);
        for (std::size_t s = begin; s < end; ++s) {
            Rng rng(Rng::mix(config.seed, s));
            const std::vector<int> perm = rng.permutation(n);
            const std::size_t bg = rng.below(config.background.size());
            const Tensor& base = config.background[bg].values;
            double* zd = z.data();
            const double* bd = base.data();
            for (std::size_t i = 0; i < z.size(); ++i) zd[i] = bd[i];
            double prev = fn->value(z);
            for (int p = 0; p < n; ++p) {
                const int i = perm[p];
                const double* row = record.data() + static_cast<std::size_t>(i) * length;
                double* zrow = zd + static_cast<std::size_t>(i) * length;
                for (std::size_t t = 0; t < length; ++t) zrow[t] = row[t];
                const double cur = fn->value(z);
                marginals[static_cast<std::size_t>(i) * M + s] = cur - prev;
                prev = cur;
            }
        }
    });

    AttributionVector av;
    av.per_feature.assign(n, 0.0);
    av.standard_error.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        const double* row = marginals.data() + static_cast<std::size_t>(i) * M;
        double mean = 0.0;
        for (std::size_t s = 0; s < M; ++s) mean += row[s];
        mean /= static_cast<double>(M);
        double var = 0.0;
        for (std::size_t s = 0; s < M; ++s) {
            const double d = row[s] - mean;
            var += d * d;
        }
        av.per_feature[i] = mean;
        av.standard_error[i] =
            M > 1 ? std::sqrt(var / static_cast<double>(M - 1) / static_cast<double>(M)) : 0.0;
    }
    av.method = Method::ss;
    av.granularity = Granularity::channel;
    av.baseline_descriptor = "background[" + std::to_string(config.background.size()) + "]";
    av.samples = static_cast<long>(M);
    av.seed = config.seed;
    return av;
}

inline AttributionVector exact_shapley(LogitFunction& f, const Tensor& record,
                                       const std::vector<Record>& background, int threads = 0) {
    f.require_input(record, "exact_shapley record");
    if (background.empty()) {
        throw std::invalid_argument("exact_shapley: background set is empty");
    }
    for (const Record& b : background) {
        require_same_shape(record, b.values, "exact_shapley background '" + b.id + "'");
    }
    const int n = static_cast<int>(record.dim(0));
    if (n > 20) {
        throw std::invalid_argument("exact_shapley: " + std::to_string(n) +
                                    " channel features exceed the 2^n enumeration cap of 20; "
                                    "use shapley_sampling instead");
    }
    const std::size_t length = record.dim(1);
    const std::size_t n_masks = std::size_t{1} << n;

    // v[mask] = mean over background of f(channels in mask from the record,
    // the rest from the background record)
    std::vector<double> v(n_masks, 0.0);
    constexpr std::size_t kChunkMasks = 64;
    const std::size_t n_chunks = (n_masks + kChunkMasks - 1) / kChunkMasks;
    const double inv_bg = 1.0 / static_cast<double>(background.size());
    parallel_for(n_chunks, threads, [&](std::size_t c) {
        std::unique_ptr<LogitFunction> fn = f.clone();
        Tensor z = Tensor::zeros_like(record);
        const std::size_t begin = c * kChunkMasks;
        const std::size_t end = std::min(n_masks, begin + kChunkMasks);
        for (std::size_t mask = begin; mask < end; ++mask) {
            double acc = 0.0;
            for (const Record& b : background) {
                double* zd = z.data();
                const double* bd = b.values.data();
                const double* xd = record.data();
                for (int i = 0; i < n; ++i) {
                    const std::size_t off = static_cast<std::size_t>(i) * length;
                    const double* src = ((mask >> i) & 1u) ? xd + off : bd + off;
                    for (std::size_t t = 0; t < length; ++t) zd[off + t] = src[t];
                }
                acc += fn->value(z);
            }
            v[mask] = acc * inv_bg;
        }
    });

    // w[s] = s!(n-1-s)!/n! = 1/(n * C(n-1, s)); C(19, s) < 2^53 so the
    // binomials are exact in double
    std::vector<double> w(n, 0.0);
    for (int s = 0; s < n; ++s) {
        double binom = 1.0;
        for (int j = 1; j <= s; ++j) binom = binom * (n - j) / j;
        w[s] = 1.0 / (n * binom);
    }

    AttributionVector av;
    av.per_feature.assign(n, 0.0);
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
        const int s = __builtin_popcountll(mask);
        for (int i = 0; i < n; ++i) {
            if ((mask >> i) & 1u) continue;
            av.per_feature[i] += w[s] * (v[mask | (std::size_t{1} << i)] - v[mask]);
        }
    }
    av.method = Method::exact_shapley;
    av.granularity = Granularity::channel;
    av.baseline_descriptor = "background[" + std::to_string(background.size()) + "]";
    return av;
}

inline AttributionVector aggregate_to_channels(const AttributionVector& attr, int n_channels,
                                               int length) {
    if (attr.granularity != Granularity::timepoint) {
        throw std::invalid_argument("aggregate_to_channels: input is not timepoint-granular");
    }
    if (attr.per_feature.size() !=
        static_cast<std::size_t>(n_channels) * static_cast<std::size_t>(length)) {
        throw std::invalid_argument("aggregate_to_channels: " +
                                    std::to_string(attr.per_feature.size()) +
                                    " values do not factor as " + std::to_string(n_channels) +
                                    " x " + std::to_string(length));
    }
    AttributionVector out = attr;
    out.granularity = Granularity::channel;
    out.per_feature.assign(n_channels, 0.0);
    out.standard_error.clear();
    for (int c = 0; c < n_channels; ++c) {
        double acc = 0.0;
        for (int t = 0; t < length; ++t) {
            acc += attr.per_feature[static_cast<std::size_t>(c) * length + t];
        }
        out.per_feature[c] = acc;
    }
    return out;
}

// --- Model-facing wrappers ----------------------------------------------------

inline AttributionVector integrated_gradients(const Model& model, const Record& record,
                                              const Tensor& baseline, int steps, int class_index,
                                              Granularity granularity = Granularity::channel,
                                              int threads = 0) {
    ModelLogit f(model, class_index);
    AttributionVector av = integrated_gradients(f, record.values, baseline, steps, granularity,
                                                threads);
    av.class_index = class_index;
    return av;
}

inline AttributionVector path_integrated_gradients(const Model& model, const Record& record,
                                                   const PathSpec& path, int class_index,
                                                   Granularity granularity = Granularity::channel,
                                                   int threads = 0) {
    ModelLogit f(model, class_index);
    AttributionVector av = path_integrated_gradients(f, record.values, path, granularity,
                                                     threads);
    av.class_index = class_index;
    return av;
}

inline AttributionVector shapley_sampling(const Model& model, const Record& record,
                                          const SSConfig& config, int class_index) {
    ModelLogit f(model, class_index);
    AttributionVector av = shapley_sampling(f, record.values, config);
    av.class_index = class_index;
    return av;
}

inline AttributionVector exact_shapley(const Model& model, const Record& record,
                                       const std::vector<Record>& background, int class_index,
                                       int threads = 0) {
    ModelLogit f(model, class_index);
    AttributionVector av = exact_shapley(f, record.values, background, threads);
    av.class_index = class_index;
    return av;
}

}  // namespace attribkit
