#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "attribkit/model.hpp"
#include "attribkit/record.hpp"
#include "attribkit/rng.hpp"

namespace attribkit {

struct TrainConfig {
    double learning_rate = 0.2;
    int epochs = 50;
    int batch_size = 16;
    std::uint64_t seed = 42;
};

struct TrainReport {
    std::vector<double> epoch_loss;  // mean cross-entropy per epoch
};

inline double accuracy(const Model& model, const std::vector<Record>& records) {
    if (records.empty()) throw std::invalid_argument("accuracy: no records");
    int hits = 0;
    const std::vector<Shape3> shapes = activation_shapes(model);
    detail::Workspace ws;
    for (const Record& r : records) {
        detail::require_input_shape(model, r.values, "accuracy");
        const Tensor& logits = detail::forward_pass(model, r.values, shapes, ws);
        int best = 0;
        for (int c = 1; c < model.n_classes; ++c) {
            if (logits[c] > logits[best]) best = c;
        }
        if (best == r.label) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(records.size());
}

// Plain SGD on softmax cross-entropy. Batches use mean gradients; the record
// order is reshuffled each epoch from the config seed, so a given (model,
// data, config) triple always trains to the same parameters.
inline TrainReport train_model(Model& model, const std::vector<Record>& records,
                               const TrainConfig& config) {
    validate_model(model);
    if (records.empty()) throw std::invalid_argument("train: no records");
    if (config.epochs < 1 || config.batch_size < 1 || config.learning_rate < 0.0) {
        throw std::invalid_argument("train: epochs and batch_size must be >= 1, learning_rate >= 0");
    }
    for (const Record& r : records) {
        detail::require_input_shape(model, r.values, "train record '" + r.id + "'");
        if (r.label < 0 || r.label >= model.n_classes) {
            throw std::invalid_argument("train record '" + r.id + "': label " +
                                        std::to_string(r.label) + " out of range [0, " +
                                        std::to_string(model.n_classes) + ")");
        }
    }

    const std::vector<Shape3> shapes = activation_shapes(model);
    detail::Workspace ws;
    detail::ParamGrads grads;
    detail::init_param_grads(model, grads);
    std::vector<double> dlogits(model.n_classes, 0.0);
    std::vector<int> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    TrainReport report;
    report.epoch_loss.reserve(config.epochs);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng rng(Rng::mix(config.seed, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = rng.below(i);
            std::swap(order[i - 1], order[j]);
        }
        double epoch_loss = 0.0;
        std::size_t cursor = 0;
        int batch_index = 0;
        while (cursor < order.size()) {
            const std::size_t batch_end =
                std::min(cursor + static_cast<std::size_t>(config.batch_size), order.size());
            const double inv_batch = 1.0 / static_cast<double>(batch_end - cursor);
            for (Tensor& t : grads.weights) t.fill(0.0);
            for (Tensor& t : grads.bias) t.fill(0.0);
            for (std::size_t s = cursor; s < batch_end; ++s) {
                const Record& r = records[order[s]];
                const Tensor& logits = detail::forward_pass(model, r.values, shapes, ws);
                double max_logit = logits[0];
                for (int c = 1; c < model.n_classes; ++c) {
                    max_logit = std::max(max_logit, logits[c]);
                }
                double sum_exp = 0.0;
                for (int c = 0; c < model.n_classes; ++c) {
                    sum_exp += std::exp(logits[c] - max_logit);
                }
                const double lse = max_logit + std::log(sum_exp);
                const double loss = lse - logits[r.label];
                if (!std::isfinite(loss)) {
                    throw std::runtime_error("train: non-finite loss at epoch " +
                                             std::to_string(epoch) + ", batch " +
                                             std::to_string(batch_index) + ", record '" + r.id +
                                             "'");
                }
                epoch_loss += loss;
                for (int c = 0; c < model.n_classes; ++c) {
                    const double softmax = std::exp(logits[c] - lse);
                    dlogits[c] = (softmax - (c == r.label ? 1.0 : 0.0)) * inv_batch;
                }
                detail::backward_pass(model, shapes, ws, dlogits, nullptr, &grads);
            }
            for (std::size_t li = 0; li < model.layers.size(); ++li) {
                Layer& layer = model.layers[li];
                if (layer.weights.size() == 0) continue;
                double* w = layer.weights.data();
                const double* dw = grads.weights[li].data();
                for (std::size_t i = 0; i < layer.weights.size(); ++i) {
                    w[i] -= config.learning_rate * dw[i];
                }
                double* b = layer.bias.data();
                const double* db = grads.bias[li].data();
                for (std::size_t i = 0; i < layer.bias.size(); ++i) {
                    b[i] -= config.learning_rate * db[i];
                }
            }
            cursor = batch_end;
            ++batch_index;
        }
        report.epoch_loss.push_back(epoch_loss / static_cast<double>(records.size()));
    }
    return report;
}

}  // namespace attribkit
