#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "attribkit/attribution.hpp"
#include "attribkit/model.hpp"
#include "attribkit/parallel.hpp"
#include "attribkit/record.hpp"

namespace attribkit {

// delta = mean over reference records of [SS(reference) - IG(reference; zero
// baseline)]. Adding it to IG-at-zero retargets the attribution at the SS
// value function without running SS on every record.
struct CompensationDelta {
    std::vector<double> per_feature;
    std::vector<std::vector<double>> per_reference_deltas;  // [k][features]
    std::vector<double> standard_error;  // of per_feature, from SS sampling noise
    std::vector<std::string> reference_ids;
    int k_references = 0;
    int class_index = 0;
    Granularity granularity = Granularity::channel;
    long ig_steps = 0;
    long ss_samples = 0;
    std::uint64_t ss_seed = 0;
    long ss_background_size = 0;
};

inline CompensationDelta estimate_delta(const Model& model, const std::vector<Record>& references,
                                        const Tensor& zero_baseline, int ig_steps,
                                        const SSConfig& ss_config, int class_index) {
    if (references.empty()) {
        throw std::invalid_argument("estimate_delta: reference list is empty");
    }
    detail::require_class_index(model, class_index, "estimate_delta");
    for (const Record& r : references) {
        detail::require_input_shape(model, r.values, "estimate_delta reference '" + r.id + "'");
    }
    require_same_shape(references[0].values, zero_baseline, "estimate_delta baseline");
    if (ss_config.granularity != Granularity::channel) {
        throw std::invalid_argument("estimate_delta: delta is channel-granular (shapley sampling "
                                    "does not support timepoint granularity)");
    }

    const std::size_t k = references.size();
    const std::size_t n = static_cast<std::size_t>(model.n_channels);
    CompensationDelta delta;
    delta.per_reference_deltas.assign(k, std::vector<double>(n, 0.0));
    std::vector<std::vector<double>> reference_se(k, std::vector<double>(n, 0.0));

    // parallel across references; the per-reference jobs run their own
    // attribution serially on substream seeds, so the result does not depend
    // on the thread count
    parallel_for(k, ss_config.threads, [&](std::size_t r) {
        SSConfig local = ss_config;
        local.seed = Rng::mix(ss_config.seed, r);
        local.threads = 1;
        const AttributionVector ss =
            shapley_sampling(model, references[r], local, class_index);
        const AttributionVector ig = integrated_gradients(
            model, references[r], zero_baseline, ig_steps, class_index, Granularity::channel, 1);
        for (std::size_t i = 0; i < n; ++i) {
            delta.per_reference_deltas[r][i] = ss.per_feature[i] - ig.per_feature[i];
            reference_se[r][i] = ss.standard_error[i];
        }
    });

    delta.per_feature.assign(n, 0.0);
    delta.standard_error.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double mean = 0.0;
        double var = 0.0;
        for (std::size_t r = 0; r < k; ++r) {
            mean += delta.per_reference_deltas[r][i];
            var += reference_se[r][i] * reference_se[r][i];
        }
        delta.per_feature[i] = mean / static_cast<double>(k);
        delta.standard_error[i] = std::sqrt(var) / static_cast<double>(k);
    }
    delta.reference_ids.reserve(k);
    for (const Record& r : references) delta.reference_ids.push_back(r.id);
    delta.k_references = static_cast<int>(k);
    delta.class_index = class_index;
    delta.granularity = Granularity::channel;
    delta.ig_steps = ig_steps;
    delta.ss_samples = ss_config.samples_per_feature;
    delta.ss_seed = ss_config.seed;
    delta.ss_background_size = static_cast<long>(ss_config.background.size());
    return delta;
}

inline AttributionVector compensated_ig(const Model& model, const Record& record,
                                        const CompensationDelta& delta,
                                        const Tensor& zero_baseline, int ig_steps,
                                        int class_index,
                                        Granularity granularity = Granularity::channel,
                                        int threads = 0) {
    if (granularity != delta.granularity) {
        throw std::invalid_argument("compensated_ig: requested " + to_string(granularity) +
                                    " granularity but delta is " + to_string(delta.granularity) +
                                    "-granular");
    }
    if (class_index != delta.class_index) {
        throw std::invalid_argument("compensated_ig: delta was estimated for class " +
                                    std::to_string(delta.class_index) + ", requested class " +
                                    std::to_string(class_index));
    }
    AttributionVector av = integrated_gradients(model, record, zero_baseline, ig_steps,
                                                class_index, granularity, threads);
    if (av.per_feature.size() != delta.per_feature.size()) {
        throw std::invalid_argument("compensated_ig: delta has " +
                                    std::to_string(delta.per_feature.size()) +
                                    " features, attribution has " +
                                    std::to_string(av.per_feature.size()));
    }
    for (std::size_t i = 0; i < av.per_feature.size(); ++i) {
        av.per_feature[i] += delta.per_feature[i];
    }
    av.method = Method::cig;
    av.baseline_descriptor = "zero+delta";
    av.samples = delta.ss_samples;
    av.seed = delta.ss_seed;
    av.standard_error = delta.standard_error;
    return av;
}

}  // namespace attribkit
