#pragma once

#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "attribkit/attribution.hpp"

namespace attribkit {

struct CostParams {
    long ig_steps = 100;             // m, backpropagations per record
    long n_records = 0;
    long n_sensors = 0;              // S
    long ss_evals_per_sensor = 0;    // F, forward passes per sensor
    long k_compensation = 0;         // K, reference records for the delta
    double backprop_cost_ratio = 1.0;  // cost of one backprop in forward units
};

inline void validate(const CostParams& p) {
    if (p.ig_steps < 1 || p.n_records < 1 || p.n_sensors < 1 || p.ss_evals_per_sensor < 1) {
        throw std::invalid_argument("cost: steps, records, sensors and evals must be >= 1");
    }
    if (p.k_compensation < 0 || !(p.backprop_cost_ratio > 0.0)) {
        throw std::invalid_argument("cost: k must be >= 0 and backprop ratio > 0");
    }
}

// Propagation counts in forward-pass units. The compensated method pays IG on
// every record plus SS on the K reference records; the reference IG runs are
// part of the per-record IG term, not an extra charge.
inline double cost(const CostParams& p, Method method) {
    validate(p);
    const double ig_all = p.backprop_cost_ratio * static_cast<double>(p.ig_steps) *
                          static_cast<double>(p.n_records);
    const double ss_per_record = static_cast<double>(p.ss_evals_per_sensor) *
                                 static_cast<double>(p.n_sensors);
    switch (method) {
        case Method::ig:
            return ig_all;
        case Method::ss:
            return ss_per_record * static_cast<double>(p.n_records);
        case Method::cig:
            return ig_all + ss_per_record * static_cast<double>(p.k_compensation);
        case Method::exact_shapley:
            break;
    }
    throw std::invalid_argument("cost: no cost model for method '" + to_string(method) + "'");
}

// "a:b:c" with the three counts divided by their gcd; requires integral costs
// (backprop_cost_ratio 1 keeps them integral).
inline std::string cost_ratio_string(const CostParams& p) {
    const double values[3] = {cost(p, Method::ig), cost(p, Method::cig), cost(p, Method::ss)};
    long long ints[3];
    for (int i = 0; i < 3; ++i) {
        ints[i] = static_cast<long long>(values[i]);
        if (static_cast<double>(ints[i]) != values[i]) {
            throw std::invalid_argument("cost ratio: costs are not integral");
        }
    }
    long long g = 0;
    for (long long v : ints) g = std::gcd(g, v);
    if (g == 0) g = 1;
    return std::to_string(ints[0] / g) + ":" + std::to_string(ints[1] / g) + ":" +
           std::to_string(ints[2] / g);
}

}  // namespace attribkit
