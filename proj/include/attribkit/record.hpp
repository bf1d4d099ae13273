#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include "attribkit/tensor.hpp"

namespace attribkit {

// One multichannel time-series instance; values has shape [n_channels, length].
struct Record {
    std::string id;
    int label = -1;  // -1 = unlabeled
    Tensor values;

    int n_channels() const { return static_cast<int>(values.dim(0)); }
    int length() const { return static_cast<int>(values.dim(1)); }
};

inline Record make_record(std::string id, int label, std::size_t n_channels, std::size_t length,
                          std::vector<double> data) {
    if (n_channels < 1 || length < 1) {
        throw std::invalid_argument("record must have n_channels >= 1 and length >= 1");
    }
    Record r;
    r.id = std::move(id);
    r.label = label;
    r.values = Tensor({n_channels, length}, std::move(data));
    return r;
}

inline void require_record_shape(const Record& record, int n_channels, int length,
                                 const std::string& context) {
    if (record.n_channels() != n_channels || record.length() != length) {
        throw std::invalid_argument(context + ": record \"" + record.id + "\" has shape " +
                                    record.values.shape_string() + ", expected [" +
                                    std::to_string(n_channels) + ", " + std::to_string(length) +
                                    "]");
    }
}

// Row `to` becomes a copy of row `from`; used to build symmetric instances.
inline Record copy_channel(const Record& record, int from, int to) {
    Record out = record;
    const int length = record.length();
    for (int t = 0; t < length; ++t) {
        out.values.at(to, t) = record.values.at(from, t);
    }
    return out;
}

inline Record swap_channels(const Record& record, int p, int q) {
    Record out = record;
    const int length = record.length();
    for (int t = 0; t < length; ++t) {
        out.values.at(p, t) = record.values.at(q, t);
        out.values.at(q, t) = record.values.at(p, t);
    }
    return out;
}

}  // namespace attribkit
