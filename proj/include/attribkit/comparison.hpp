#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "attribkit/attribution.hpp"
#include "attribkit/compensation.hpp"
#include "attribkit/dataset.hpp"
#include "attribkit/model.hpp"
#include "attribkit/parallel.hpp"
#include "attribkit/spearman.hpp"
#include "attribkit/textio.hpp"

namespace attribkit {

struct ComparisonConfig {
    int ig_steps = 256;
    int ss_samples = 500;
    int k_references = 10;
    int background_size = 32;
    int truth_ss_samples = 20000;  // used when the exact oracle is out of reach
    std::uint64_t seed = 42;
    int threads = 0;
    std::string dataset_tag = "synthetic";
    std::string model_tag = "temporal";
};

struct SpearmanRow {
    std::string dataset_tag;
    std::string model_tag;
    int class_label = 0;
    std::string method;
    double rho = 0.0;
};

// Per-record rank correlations against the truth oracle, kept so callers can
// test orderings record by record rather than only on class means.
struct RecordRho {
    std::string record_id;
    int label = 0;
    double cig = 0.0;
    double ss = 0.0;
    double ig = 0.0;
};

struct SpearmanReport {
    std::vector<SpearmanRow> rows;  // mean rho per (class, method)
    std::vector<RecordRho> per_record;
    int n_records = 0;
    std::string truth;  // "exact_shapley" or "ss[M]"
};

// Table-1 protocol: every evaluation record is attributed at its own label,
// each method's channel ranking is correlated against the truth oracle, and
// the report carries class means. The background subsample, per-class deltas
// and per-record seeds all derive from config.seed, so the report is fully
// reproducible.
inline SpearmanReport comparison_table(const Model& model, const Dataset& eval_data,
                                       const Dataset& train_data,
                                       const ComparisonConfig& config) {
    if (eval_data.records.empty() || train_data.records.empty()) {
        throw std::invalid_argument("comparison_table: empty dataset");
    }
    if (model.n_channels != eval_data.n_channels || model.input_length != eval_data.length) {
        throw std::invalid_argument("comparison_table: model input [" +
                                    std::to_string(model.n_channels) + ", " +
                                    std::to_string(model.input_length) +
                                    "] does not match dataset shape");
    }
    if (model.n_channels < 2) {
        throw std::invalid_argument("comparison_table: need at least 2 features for rank "
                                    "correlation");
    }

    // one shared background subsample of the training split
    std::vector<Record> background;
    {
        Rng rng(Rng::mix(config.seed, 0xb6));
        const std::size_t want =
            std::min<std::size_t>(static_cast<std::size_t>(config.background_size),
                                  train_data.records.size());
        std::vector<int> order = rng.permutation(static_cast<int>(train_data.records.size()));
        for (std::size_t i = 0; i < want; ++i) {
            background.push_back(train_data.records[order[i]]);
        }
    }

    const bool exact_truth = model.n_channels <= 20;
    const Tensor zeros = zero_baseline(model);

    // per-class compensation deltas from seeded training references
    std::vector<CompensationDelta> deltas;
    for (int c = 0; c < model.n_classes; ++c) {
        const std::vector<Record> of_class = records_of_class(train_data, c);
        if (of_class.empty()) {
            throw std::invalid_argument("comparison_table: training split has no records of "
                                        "class " + std::to_string(c));
        }
        Rng rng(Rng::mix(config.seed, 0xc0 + static_cast<std::uint64_t>(c)));
        std::vector<int> order = rng.permutation(static_cast<int>(of_class.size()));
        std::vector<Record> references;
        const std::size_t want = std::min<std::size_t>(
            static_cast<std::size_t>(config.k_references), of_class.size());
        for (std::size_t i = 0; i < want; ++i) references.push_back(of_class[order[i]]);
        SSConfig ss;
        ss.samples_per_feature = config.ss_samples;
        ss.background = background;
        ss.seed = Rng::mix(config.seed, 0xd0 + static_cast<std::uint64_t>(c));
        ss.threads = config.threads;
        deltas.push_back(estimate_delta(model, references, zeros, config.ig_steps, ss, c));
    }

    SpearmanReport report;
    report.n_records = static_cast<int>(eval_data.records.size());
    report.truth = exact_truth ? "exact_shapley"
                               : "ss[" + std::to_string(config.truth_ss_samples) + "]";
    report.per_record.resize(eval_data.records.size());

    parallel_for(eval_data.records.size(), config.threads, [&](std::size_t idx) {
        const Record& record = eval_data.records[idx];
        const int label = record.label;
        if (label < 0 || label >= model.n_classes) {
            throw std::invalid_argument("comparison_table: record '" + record.id +
                                        "' has label outside the model's classes");
        }

        AttributionVector truth;
        if (exact_truth) {
            truth = exact_shapley(model, record, background, label, 1);
        } else {
            SSConfig ss;
            ss.samples_per_feature = config.truth_ss_samples;
            ss.background = background;
            ss.seed = Rng::mix(config.seed, 0xe000 + idx);
            ss.threads = 1;
            truth = shapley_sampling(model, record, ss, label);
        }

        SSConfig ss;
        ss.samples_per_feature = config.ss_samples;
        ss.background = background;
        ss.seed = Rng::mix(config.seed, 0xf000 + idx);
        ss.threads = 1;
        const AttributionVector ss_av = shapley_sampling(model, record, ss, label);
        const AttributionVector ig_av = integrated_gradients(model, record, zeros,
                                                             config.ig_steps, label,
                                                             Granularity::channel, 1);
        const AttributionVector cig_av = compensated_ig(model, record, deltas[label], zeros,
                                                        config.ig_steps, label,
                                                        Granularity::channel, 1);
        RecordRho& row = report.per_record[idx];
        row.record_id = record.id;
        row.label = label;
        try {
            row.cig = spearman(cig_av.per_feature, truth.per_feature);
            row.ss = spearman(ss_av.per_feature, truth.per_feature);
            row.ig = spearman(ig_av.per_feature, truth.per_feature);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("comparison_table: record '" + record.id + "': " +
                                        e.what());
        }
    });

    for (int c = 0; c < model.n_classes; ++c) {
        double sum_cig = 0.0, sum_ss = 0.0, sum_ig = 0.0;
        int count = 0;
        for (const RecordRho& row : report.per_record) {
            if (row.label != c) continue;
            sum_cig += row.cig;
            sum_ss += row.ss;
            sum_ig += row.ig;
            ++count;
        }
        if (count == 0) continue;
        for (const auto& [method, total] :
             {std::pair<const char*, double>{"cig", sum_cig}, {"ss", sum_ss}, {"ig", sum_ig}}) {
            SpearmanRow row;
            row.dataset_tag = config.dataset_tag;
            row.model_tag = config.model_tag;
            row.class_label = c;
            row.method = method;
            row.rho = total / count;
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

inline double mean_rho(const SpearmanReport& report, const std::string& method) {
    double total = 0.0;
    int count = 0;
    for (const SpearmanRow& row : report.rows) {
        if (row.method != method) continue;
        total += row.rho;
        ++count;
    }
    if (count == 0) {
        throw std::invalid_argument("mean_rho: no rows for method '" + method + "'");
    }
    return total / count;
}

// Table-1 layout: one line per (dataset, class), methods as columns.
inline std::string comparison_csv(const SpearmanReport& report) {
    std::string out = "dataset,class,cig,ss,ig\n";
    std::vector<int> classes;
    for (const SpearmanRow& row : report.rows) {
        bool seen = false;
        for (int c : classes) seen = seen || c == row.class_label;
        if (!seen) classes.push_back(row.class_label);
    }
    for (int c : classes) {
        double cig = 0.0, ss = 0.0, ig = 0.0;
        std::string dataset;
        for (const SpearmanRow& row : report.rows) {
            if (row.class_label != c) continue;
            dataset = row.dataset_tag;
            if (row.method == "cig") cig = row.rho;
            if (row.method == "ss") ss = row.rho;
            if (row.method == "ig") ig = row.rho;
        }
        out += dataset + "," + std::to_string(c) + "," + format_real(cig) + "," +
               format_real(ss) + "," + format_real(ig) + "\n";
    }
    return out;
}

inline void write_comparison_csv(const SpearmanReport& report, const std::string& path) {
    write_text_file(path, comparison_csv(report));
}

}  // namespace attribkit
