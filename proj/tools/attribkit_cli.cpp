#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "attribkit/attribkit.hpp"

namespace {

using namespace attribkit;

std::vector<Record> seeded_subsample(const std::vector<Record>& pool, std::size_t want,
                                     std::uint64_t seed) {
    Rng rng(seed);
    std::vector<int> order = rng.permutation(static_cast<int>(pool.size()));
    std::vector<Record> out;
    const std::size_t n = std::min(want, pool.size());
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(pool[order[i]]);
    return out;
}

Tensor baseline_from_flag(const std::string& flag, const Model& model) {
    if (flag == "zero") return zero_baseline(model);
    const Dataset d = load_csv(flag);
    if (d.records.empty()) {
        throw std::invalid_argument("baseline file '" + flag + "' has no records");
    }
    if (d.n_channels != model.n_channels || d.length != model.input_length) {
        throw std::invalid_argument("baseline file '" + flag + "' shape does not match model");
    }
    return d.records.front().values;
}

Granularity granularity_from_flag(const std::string& flag) {
    if (flag == "channel") return Granularity::channel;
    if (flag == "timepoint") return Granularity::timepoint;
    throw std::invalid_argument("granularity must be 'channel' or 'timepoint', got '" + flag +
                                "'");
}

struct GenArgs {
    std::string out_train, out_eval;
    SyntheticConfig config;
};

int cmd_gen(const GenArgs& args) {
    const SyntheticDataset data = generate_synthetic(args.config);
    save_csv(data.train, args.out_train);
    save_csv(data.eval, args.out_eval);
    std::cout << "gen: wrote " << data.train.records.size() << " train records to "
              << args.out_train << " and " << data.eval.records.size() << " eval records to "
              << args.out_eval << "\n";
    return 0;
}

struct TrainArgs {
    std::string data_path, eval_path, out_path;
    std::string arch = "temporal";
    TrainConfig config;
    std::uint64_t init_seed = 42;
};

int cmd_train(const TrainArgs& args) {
    const Dataset data = load_csv(args.data_path);
    Model model = args.arch == "spatiotemporal"
                      ? make_spatiotemporal_model(data.n_channels, data.length, data.n_classes,
                                                  args.init_seed)
                      : make_temporal_model(data.n_channels, data.length, data.n_classes,
                                            args.init_seed);
    const TrainReport report = train_model(model, data.records, args.config);
    save_model(model, args.out_path);
    std::cout << "train: " << args.arch << " model, " << report.epoch_loss.size()
              << " epochs, final loss " << format_real(report.epoch_loss.back())
              << ", train accuracy " << format_real(accuracy(model, data.records));
    if (!args.eval_path.empty()) {
        const Dataset eval_data = load_csv(args.eval_path);
        std::cout << ", eval accuracy " << format_real(accuracy(model, eval_data.records));
    }
    std::cout << ", wrote " << args.out_path << "\n";
    return 0;
}

struct AttributeArgs {
    std::string model_path, data_path, out_path;
    std::string method = "ig";
    std::string baseline = "zero";
    std::string background_path, delta_path;
    std::string granularity = "channel";
    int class_index = -1;  // -1: use each record's own label
    int steps = 256;
    int samples = 500;
    int background_size = 32;
    std::uint64_t seed = 42;
    int threads = 0;
};

int cmd_attribute(const AttributeArgs& args) {
    const Model model = load_model(args.model_path);
    const Dataset data = load_csv(args.data_path);
    if (data.n_channels != model.n_channels || data.length != model.input_length) {
        throw std::invalid_argument("attribute: dataset shape does not match model input");
    }
    const Granularity granularity = granularity_from_flag(args.granularity);

    std::vector<Record> background;
    if (args.method == "ss" || args.method == "exact_shapley") {
        if (args.background_path.empty()) {
            throw std::invalid_argument("attribute: --method " + args.method +
                                        " requires --background");
        }
        const Dataset bg = load_csv(args.background_path);
        background = seeded_subsample(bg.records,
                                      static_cast<std::size_t>(args.background_size),
                                      Rng::mix(args.seed, 0xb6));
    }
    CompensationDelta delta;
    if (args.method == "cig") {
        if (args.delta_path.empty()) {
            throw std::invalid_argument("attribute: --method cig requires --delta");
        }
        if (args.class_index < 0) {
            throw std::invalid_argument("attribute: --method cig requires an explicit --class "
                                        "matching the delta file");
        }
        if (args.baseline != "zero") {
            throw std::invalid_argument("attribute: --method cig corrects the zero baseline; "
                                        "--baseline must stay 'zero'");
        }
        delta = load_delta(args.delta_path);
    }
    const Tensor baseline = baseline_from_flag(args.baseline, model);

    auto class_of = [&](const Record& r) {
        if (args.class_index >= 0) return args.class_index;
        if (r.label < 0) {
            throw std::invalid_argument("attribute: record '" + r.id +
                                        "' is unlabeled; pass --class");
        }
        return r.label;
    };

    std::vector<AttributionRow> rows;
    rows.reserve(data.records.size());
    for (std::size_t i = 0; i < data.records.size(); ++i) {
        const Record& record = data.records[i];
        const int cls = class_of(record);
        AttributionVector av;
        if (args.method == "ig") {
            av = integrated_gradients(model, record, baseline, args.steps, cls, granularity,
                                      args.threads);
        } else if (args.method == "ss") {
            SSConfig ss;
            ss.samples_per_feature = args.samples;
            ss.background = background;
            ss.seed = Rng::mix(args.seed, i);
            ss.granularity = granularity;
            ss.threads = args.threads;
            av = shapley_sampling(model, record, ss, cls);
        } else if (args.method == "exact_shapley") {
            if (granularity != Granularity::channel) {
                throw std::invalid_argument("attribute: exact_shapley is channel-granular");
            }
            av = exact_shapley(model, record, background, cls, args.threads);
        } else if (args.method == "cig") {
            av = compensated_ig(model, record, delta, baseline, args.steps, cls, granularity,
                                args.threads);
        } else {
            throw std::invalid_argument("attribute: unknown method '" + args.method +
                                        "' (expected ig, ss, exact_shapley or cig)");
        }
        av.seed = args.seed;
        rows.push_back({record.id, std::move(av)});
    }
    write_attribution_csv(rows, args.out_path);
    std::cout << "attribute: method " << args.method << ", " << rows.size()
              << " records, wrote " << args.out_path << " and " << args.out_path
              << ".meta.json\n";
    return 0;
}

struct DeltaArgs {
    std::string model_path, train_path, out_path;
    int class_index = 0;
    int k = 10;
    int steps = 256;
    int samples = 500;
    int background_size = 32;
    std::uint64_t seed = 42;
    int threads = 0;
};

int cmd_delta(const DeltaArgs& args) {
    const Model model = load_model(args.model_path);
    const Dataset train = load_csv(args.train_path);
    const std::vector<Record> of_class = records_of_class(train, args.class_index);
    if (of_class.empty()) {
        throw std::invalid_argument("delta: no training records of class " +
                                    std::to_string(args.class_index));
    }
    const std::vector<Record> references =
        seeded_subsample(of_class, static_cast<std::size_t>(args.k),
                         Rng::mix(args.seed, 0xc0 + static_cast<std::uint64_t>(args.class_index)));
    SSConfig ss;
    ss.samples_per_feature = args.samples;
    ss.background = seeded_subsample(train.records,
                                     static_cast<std::size_t>(args.background_size),
                                     Rng::mix(args.seed, 0xb6));
    ss.seed = Rng::mix(args.seed, 0xd0 + static_cast<std::uint64_t>(args.class_index));
    ss.threads = args.threads;
    const CompensationDelta delta = estimate_delta(model, references, zero_baseline(model),
                                                   args.steps, ss, args.class_index);
    save_delta(delta, args.out_path);
    std::cout << "delta: class " << args.class_index << ", " << delta.k_references
              << " references, wrote " << args.out_path << "\n";
    return 0;
}

struct CompareArgs {
    std::string model_path, train_path, eval_path, out_path, per_record_path;
    std::string truth = "exact";
    ComparisonConfig config;
};

int cmd_compare(const CompareArgs& args) {
    const Model model = load_model(args.model_path);
    if (args.truth == "exact" && model.n_channels > 20) {
        throw std::invalid_argument("compare: --truth exact supports at most 20 channel "
                                    "features; this model has " +
                                    std::to_string(model.n_channels) + ", use --truth ss");
    }
    if (args.truth != "exact" && args.truth != "ss") {
        throw std::invalid_argument("compare: --truth must be 'exact' or 'ss'");
    }
    const Dataset train = load_csv(args.train_path);
    const Dataset eval_data = load_csv(args.eval_path);
    ComparisonConfig config = args.config;
    config.model_tag = to_string(model.architecture);
    const SpearmanReport report = comparison_table(model, eval_data, train, config);
    write_comparison_csv(report, args.out_path);
    if (!args.per_record_path.empty()) {
        std::string text = "record_id,label,cig,ss,ig\n";
        for (const RecordRho& row : report.per_record) {
            text += row.record_id + "," + std::to_string(row.label) + "," +
                    format_real(row.cig) + "," + format_real(row.ss) + "," +
                    format_real(row.ig) + "\n";
        }
        write_text_file(args.per_record_path, text);
    }
    std::cout << "compare: truth " << report.truth << ", " << report.n_records
              << " records, mean rho cig=" << format_real(mean_rho(report, "cig"))
              << " ss=" << format_real(mean_rho(report, "ss"))
              << " ig=" << format_real(mean_rho(report, "ig")) << ", wrote " << args.out_path
              << "\n";
    return 0;
}

struct AxiomsArgs {
    std::string suite = "all";
    std::string arch = "temporal";
    std::string out_path;
    std::uint64_t seed = 42;
    int threads = 0;
};

int cmd_axioms(const AxiomsArgs& args) {
    if (args.suite != "all") {
        throw std::invalid_argument("axioms: only --suite all is available");
    }
    const Architecture arch = args.arch == "spatiotemporal" ? Architecture::spatiotemporal
                                                            : Architecture::temporal;
    const AxiomSuiteReport report = run_axiom_suite(arch, args.seed, args.threads);
    const std::string text = format_axiom_report(report);
    std::cout << text;
    if (!args.out_path.empty()) write_text_file(args.out_path, text);
    return report.all_pass ? 0 : 2;
}

struct CostArgs {
    CostParams params;
    std::string out_path;
};

int cmd_cost(const CostArgs& args) {
    const std::string json = cost_report_json(args.params);
    std::cout << "cost: ig=" << format_real(cost(args.params, Method::ig))
              << " cig=" << format_real(cost(args.params, Method::cig))
              << " ss=" << format_real(cost(args.params, Method::ss)) << " ratio "
              << cost_ratio_string(args.params) << "\n";
    if (!args.out_path.empty()) write_text_file(args.out_path, json);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"attribkit: baseline-compensated integrated gradients toolkit"};
    app.require_subcommand(1);

    GenArgs gen;
    CLI::App* gen_cmd = app.add_subcommand("gen", "generate a synthetic dataset");
    gen_cmd->add_option("--out-train", gen.out_train, "train split CSV path")->required();
    gen_cmd->add_option("--out-eval", gen.out_eval, "eval split CSV path")->required();
    gen_cmd->add_option("--channels", gen.config.n_channels, "channels per record");
    gen_cmd->add_option("--length", gen.config.length, "timepoints per channel");
    gen_cmd->add_option("--classes", gen.config.n_classes, "number of classes");
    gen_cmd->add_option("--train-per-class", gen.config.train_per_class, "train records/class");
    gen_cmd->add_option("--eval-per-class", gen.config.eval_per_class, "eval records/class");
    gen_cmd->add_option("--offset", gen.config.offset, "DC offset on every channel");
    gen_cmd->add_option("--noise", gen.config.noise_scale, "noise standard deviation");
    gen_cmd->add_option("--disc", gen.config.discriminative_channels,
                        "discriminative channel indices");
    gen_cmd->add_option("--seed", gen.config.seed, "generator seed");

    TrainArgs train;
    CLI::App* train_cmd = app.add_subcommand("train", "train a model on a dataset CSV");
    train_cmd->add_option("--data", train.data_path, "training CSV")->required();
    train_cmd->add_option("--out", train.out_path, "output model JSON")->required();
    train_cmd->add_option("--eval", train.eval_path, "optional eval CSV for accuracy");
    train_cmd->add_option("--arch", train.arch, "temporal or spatiotemporal")
        ->check(CLI::IsMember({"temporal", "spatiotemporal"}));
    train_cmd->add_option("--epochs", train.config.epochs, "training epochs");
    train_cmd->add_option("--batch", train.config.batch_size, "batch size");
    train_cmd->add_option("--lr", train.config.learning_rate, "learning rate");
    train_cmd->add_option("--seed", train.config.seed, "shuffle/init seed");

    AttributeArgs attr;
    CLI::App* attr_cmd = app.add_subcommand("attribute", "attribute records in a dataset");
    attr_cmd->add_option("--model", attr.model_path, "model JSON")->required();
    attr_cmd->add_option("--data", attr.data_path, "records CSV")->required();
    attr_cmd->add_option("--out", attr.out_path, "output attribution CSV")->required();
    attr_cmd->add_option("--method", attr.method, "ig, ss, exact_shapley or cig");
    attr_cmd->add_option("--class", attr.class_index,
                         "target class (-1: each record's own label)");
    attr_cmd->add_option("--steps", attr.steps, "IG integration steps");
    attr_cmd->add_option("--samples", attr.samples, "SS samples per feature");
    attr_cmd->add_option("--baseline", attr.baseline, "'zero' or CSV whose first record is the "
                                                      "baseline");
    attr_cmd->add_option("--background", attr.background_path, "CSV pool for the SS background");
    attr_cmd->add_option("--background-size", attr.background_size, "background subsample size");
    attr_cmd->add_option("--delta", attr.delta_path, "delta JSON (cig)");
    attr_cmd->add_option("--granularity", attr.granularity, "channel or timepoint");
    attr_cmd->add_option("--seed", attr.seed, "sampling seed");
    attr_cmd->add_option("--threads", attr.threads, "worker threads (0: auto)");

    DeltaArgs delta;
    CLI::App* delta_cmd = app.add_subcommand("delta", "estimate a compensation delta");
    delta_cmd->add_option("--model", delta.model_path, "model JSON")->required();
    delta_cmd->add_option("--train", delta.train_path, "training CSV")->required();
    delta_cmd->add_option("--out", delta.out_path, "output delta JSON")->required();
    delta_cmd->add_option("--class", delta.class_index, "target class");
    delta_cmd->add_option("--k", delta.k, "reference record count");
    delta_cmd->add_option("--steps", delta.steps, "IG integration steps");
    delta_cmd->add_option("--samples", delta.samples, "SS samples per feature");
    delta_cmd->add_option("--background-size", delta.background_size,
                          "background subsample size");
    delta_cmd->add_option("--seed", delta.seed, "sampling seed");
    delta_cmd->add_option("--threads", delta.threads, "worker threads (0: auto)");

    CompareArgs compare;
    CLI::App* compare_cmd = app.add_subcommand("compare",
                                               "rank-correlation table against a truth oracle");
    compare_cmd->add_option("--model", compare.model_path, "model JSON")->required();
    compare_cmd->add_option("--train", compare.train_path, "training CSV")->required();
    compare_cmd->add_option("--eval", compare.eval_path, "evaluation CSV")->required();
    compare_cmd->add_option("--out", compare.out_path, "output table CSV")->required();
    compare_cmd->add_option("--per-record", compare.per_record_path,
                            "optional per-record rho CSV");
    compare_cmd->add_option("--truth", compare.truth, "exact or ss");
    compare_cmd->add_option("--steps", compare.config.ig_steps, "IG integration steps");
    compare_cmd->add_option("--samples", compare.config.ss_samples, "SS samples per feature");
    compare_cmd->add_option("--truth-samples", compare.config.truth_ss_samples,
                            "SS samples for --truth ss");
    compare_cmd->add_option("--k", compare.config.k_references, "delta reference count");
    compare_cmd->add_option("--background-size", compare.config.background_size,
                            "background subsample size");
    compare_cmd->add_option("--dataset-tag", compare.config.dataset_tag, "label for the CSV");
    compare_cmd->add_option("--seed", compare.config.seed, "sampling seed");
    compare_cmd->add_option("--threads", compare.config.threads, "worker threads (0: auto)");

    AxiomsArgs axioms;
    CLI::App* axioms_cmd = app.add_subcommand("axioms", "run the axiom check suite");
    axioms_cmd->add_option("--suite", axioms.suite, "check suite name (all)");
    axioms_cmd->add_option("--arch", axioms.arch, "temporal or spatiotemporal")
        ->check(CLI::IsMember({"temporal", "spatiotemporal"}));
    axioms_cmd->add_option("--out", axioms.out_path, "optional report file");
    axioms_cmd->add_option("--seed", axioms.seed, "suite seed");
    axioms_cmd->add_option("--threads", axioms.threads, "worker threads (0: auto)");

    CostArgs cost_args;
    CLI::App* cost_cmd = app.add_subcommand("cost", "propagation-count cost model");
    cost_cmd->add_option("--m", cost_args.params.ig_steps, "IG steps per record");
    cost_cmd->add_option("--records", cost_args.params.n_records, "records to attribute");
    cost_cmd->add_option("--sensors", cost_args.params.n_sensors, "sensors (channel features)");
    cost_cmd->add_option("--evals", cost_args.params.ss_evals_per_sensor,
                         "SS forward passes per sensor");
    cost_cmd->add_option("--k", cost_args.params.k_compensation, "compensation references");
    cost_cmd->add_option("--backprop-ratio", cost_args.params.backprop_cost_ratio,
                         "cost of one backprop in forward units");
    cost_cmd->add_option("--out", cost_args.out_path, "optional cost JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help();
        return 1;
    }

    try {
        if (gen_cmd->parsed()) return cmd_gen(gen);
        if (train_cmd->parsed()) return cmd_train(train);
        if (attr_cmd->parsed()) return cmd_attribute(attr);
        if (delta_cmd->parsed()) return cmd_delta(delta);
        if (compare_cmd->parsed()) return cmd_compare(compare);
        if (axioms_cmd->parsed()) return cmd_axioms(axioms);
        if (cost_cmd->parsed()) return cmd_cost(cost_args);
        std::cerr << app.help();
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
