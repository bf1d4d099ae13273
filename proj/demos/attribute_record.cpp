// Trains a small temporal classifier on synthetic data, then attributes one
// evaluation record with IG at a zero baseline, compensated IG, Shapley
// sampling, and the exact-Shapley oracle.
#include <cstdio>

#include "attribkit/attribkit.hpp"

int main() {
    using namespace attribkit;

    SyntheticConfig data_cfg;
    data_cfg.train_per_class = 40;
    data_cfg.eval_per_class = 4;
    const SyntheticDataset data = generate_synthetic(data_cfg);

    Model model = make_temporal_model(data_cfg.n_channels, data_cfg.length, data_cfg.n_classes,
                                      42);
    TrainConfig train_cfg;
    train_cfg.epochs = 60;
    train_model(model, data.train.records, train_cfg);
    std::printf("train accuracy: %.3f\n", accuracy(model, data.train.records));

    const Record& record = data.eval.records.front();
    const int cls = record.label;
    std::printf("record %s, class %d\n", record.id.c_str(), cls);

    std::vector<Record> background(data.train.records.begin(), data.train.records.begin() + 16);
    SSConfig ss_cfg;
    ss_cfg.background = background;

    const AttributionVector ig = integrated_gradients(model, record, zero_baseline(model), 256,
                                                      cls);
    const AttributionVector ss = shapley_sampling(model, record, ss_cfg, cls);
    const AttributionVector truth = exact_shapley(model, record, background, cls);

    std::vector<Record> references(data.train.records.begin(), data.train.records.begin() + 10);
    const CompensationDelta delta = estimate_delta(model, references, zero_baseline(model), 256,
                                                   ss_cfg, cls);
    const AttributionVector cig = compensated_ig(model, record, delta, zero_baseline(model), 256,
                                                 cls);

    std::printf("%8s %10s %10s %10s %10s\n", "channel", "ig", "cig", "ss", "exact");
    for (int i = 0; i < data_cfg.n_channels; ++i) {
        std::printf("%8d %10.4f %10.4f %10.4f %10.4f\n", i, ig.per_feature[i],
                    cig.per_feature[i], ss.per_feature[i], truth.per_feature[i]);
    }
    std::printf("spearman vs exact: ig %.3f, cig %.3f, ss %.3f\n",
                spearman(ig.per_feature, truth.per_feature),
                spearman(cig.per_feature, truth.per_feature),
                spearman(ss.per_feature, truth.per_feature));
    return 0;
}
