#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "attribkit/record.hpp"
#include "attribkit/rng.hpp"
#include "attribkit/tensor.hpp"
#include "attribkit/textio.hpp"

namespace attribkit {

struct Dataset {
    std::vector<Record> records;
    int n_channels = 0;
    int length = 0;
    int n_classes = 0;
};

inline std::vector<Record> records_of_class(const Dataset& dataset, int label) {
    std::vector<Record> out;
    for (const Record& r : dataset.records) {
        if (r.label == label) out.push_back(r);
    }
    return out;
}

struct SyntheticConfig {
    int n_channels = 6;
    int length = 64;
    int n_classes = 2;
    int train_per_class = 200;
    int eval_per_class = 200;
    double offset = 0.5;       // DC level on every channel; puts the zero input
                               // far off the data manifold
    double noise_scale = 0.1;
    std::vector<int> discriminative_channels = {0, 1};
    std::uint64_t seed = 42;
};

struct SyntheticDataset {
    Dataset train;
    Dataset eval;
    SyntheticConfig config;
};

namespace detail {

inline Record synthesize_record(const SyntheticConfig& cfg, int label, const std::string& id,
                                Rng& rng) {
    Tensor values({static_cast<std::size_t>(cfg.n_channels),
                   static_cast<std::size_t>(cfg.length)});
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    for (int ch = 0; ch < cfg.n_channels; ++ch) {
        const bool discriminative =
            std::find(cfg.discriminative_channels.begin(), cfg.discriminative_channels.end(),
                      ch) != cfg.discriminative_channels.end();
        const double amplitude = 0.6 + 0.5 * label;
        const double cycles = 2.0 + 2.0 * label;
        const double phase = rng.uniform(0.0, kTwoPi);
        for (int t = 0; t < cfg.length; ++t) {
            double v = cfg.offset + cfg.noise_scale * rng.normal();
            if (discriminative) {
                v += amplitude * std::sin(kTwoPi * cycles * t / cfg.length + phase);
            }
            values.at(static_cast<std::size_t>(ch), static_cast<std::size_t>(t)) = v;
        }
    }
    Record r;
    r.id = id;
    r.label = label;
    r.values = std::move(values);
    return r;
}

inline Dataset synthesize_split(const SyntheticConfig& cfg, const std::string& split,
                                int per_class, Rng& rng) {
    Dataset d;
    d.n_channels = cfg.n_channels;
    d.length = cfg.length;
    d.n_classes = cfg.n_classes;
    for (int c = 0; c < cfg.n_classes; ++c) {
        for (int j = 0; j < per_class; ++j) {
            char id[64];
            std::snprintf(id, sizeof(id), "%s-c%d-r%03d", split.c_str(), c, j);
            d.records.push_back(synthesize_record(cfg, c, id, rng));
        }
    }
    return d;
}

}  // namespace detail

// Class structure lives in the discriminative channels as class-dependent
// sinusoids (amplitude and frequency both shift with the label, phase is
// random per record per channel). Every other channel is offset plus noise,
// identically distributed across classes.
inline SyntheticDataset generate_synthetic(const SyntheticConfig& config) {
    if (config.n_channels < 1 || config.length < 1 || config.train_per_class < 1 ||
        config.eval_per_class < 1) {
        throw std::invalid_argument("generate_synthetic: counts must be positive");
    }
    if (config.n_classes < 2) {
        throw std::invalid_argument("generate_synthetic: need at least 2 classes");
    }
    if (config.noise_scale < 0.0) {
        throw std::invalid_argument("generate_synthetic: noise_scale must be >= 0");
    }
    for (int ch : config.discriminative_channels) {
        if (ch < 0 || ch >= config.n_channels) {
            throw std::invalid_argument("generate_synthetic: discriminative channel " +
                                        std::to_string(ch) + " out of range [0, " +
                                        std::to_string(config.n_channels) + ")");
        }
    }
    SyntheticDataset out;
    out.config = config;
    Rng rng(config.seed);
    out.train = detail::synthesize_split(config, "train", config.train_per_class, rng);
    out.eval = detail::synthesize_split(config, "eval", config.eval_per_class, rng);
    return out;
}

inline std::string dataset_header(int n_channels, int length) {
    std::string header = "id,label";
    for (int ch = 0; ch < n_channels; ++ch) {
        for (int t = 0; t < length; ++t) {
            header += ",ch" + std::to_string(ch) + "_t" + std::to_string(t);
        }
    }
    return header;
}

inline void save_csv(const Dataset& dataset, const std::string& path) {
    std::string text = "#channels=" + std::to_string(dataset.n_channels) +
                       " length=" + std::to_string(dataset.length) +
                       " classes=" + std::to_string(dataset.n_classes) + "\n";
    text += dataset_header(dataset.n_channels, dataset.length) + "\n";
    for (const Record& r : dataset.records) {
        require_record_shape(r, dataset.n_channels, dataset.length, "save_csv record '" + r.id +
                                                                        "'");
        text += r.id + "," + std::to_string(r.label);
        for (std::size_t i = 0; i < r.values.size(); ++i) {
            text += ",";
            text += format_real(r.values[i]);
        }
        text += "\n";
    }
    write_text_file(path, text);
}

inline Dataset load_csv(const std::string& path) {
    const std::string text = read_text_file(path);
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    if (!cur.empty()) lines.push_back(cur);
    if (lines.size() < 2) {
        throw std::invalid_argument(path + ": missing preamble or column header");
    }

    Dataset d;
    {
        const std::string& preamble = lines[0];
        if (preamble.rfind("#", 0) != 0) {
            throw std::invalid_argument(path + ": first line must be the #channels preamble");
        }
        for (const std::string& token : split(preamble.substr(1), ' ')) {
            if (token.empty()) continue;
            const std::vector<std::string> kv = split(token, '=');
            if (kv.size() != 2) {
                throw std::invalid_argument(path + ": bad preamble token '" + token + "'");
            }
            const long value = parse_integer(kv[1], path + " preamble " + kv[0]);
            if (kv[0] == "channels") {
                d.n_channels = static_cast<int>(value);
            } else if (kv[0] == "length") {
                d.length = static_cast<int>(value);
            } else if (kv[0] == "classes") {
                d.n_classes = static_cast<int>(value);
            } else {
                throw std::invalid_argument(path + ": unknown preamble key '" + kv[0] + "'");
            }
        }
        if (d.n_channels < 1 || d.length < 1 || d.n_classes < 1) {
            throw std::invalid_argument(path + ": preamble must declare positive channels, "
                                               "length and classes");
        }
    }
    if (lines[1] != dataset_header(d.n_channels, d.length)) {
        throw std::invalid_argument(path + ": column header does not match the declared shape");
    }

    const std::size_t expected = 2 + static_cast<std::size_t>(d.n_channels) * d.length;
    for (std::size_t li = 2; li < lines.size(); ++li) {
        if (lines[li].empty()) continue;
        const std::vector<std::string> cells = split(lines[li], ',');
        const std::string where = path + " row " + std::to_string(li + 1);
        if (cells.size() != expected) {
            throw std::invalid_argument(where + ": has " + std::to_string(cells.size()) +
                                        " cells, expected " + std::to_string(expected));
        }
        Record r;
        r.id = cells[0];
        r.label = static_cast<int>(parse_integer(cells[1], where + " label"));
        if (r.label < 0 || r.label >= d.n_classes) {
            throw std::invalid_argument(where + ": label " + std::to_string(r.label) +
                                        " out of range [0, " + std::to_string(d.n_classes) + ")");
        }
        std::vector<double> values;
        values.reserve(expected - 2);
        for (std::size_t i = 2; i < cells.size(); ++i) {
            values.push_back(parse_real(cells[i], where + " column " + std::to_string(i + 1)));
        }
        r.values = Tensor({static_cast<std::size_t>(d.n_channels),
                           static_cast<std::size_t>(d.length)},
                          std::move(values));
        d.records.push_back(std::move(r));
    }
    return d;
}

}  // namespace attribkit
