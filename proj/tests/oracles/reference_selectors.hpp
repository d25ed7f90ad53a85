#pragma once

// Straight-line transcriptions of the two selector algorithms over fully
// materialized inputs. No streaming, no shared code with the library.

#include <cstddef>
#include <vector>

namespace oracle {

struct Field {
    std::vector<float> values;
};

struct FlowsParams {
    std::size_t queue = 5;
    double tau = 0.9;
    double eps = 1e-9;
};

struct SurgeParams {
    std::size_t window = 5;
    double gamma = 3.0;
    std::size_t patience = 4;
    std::size_t history = 8;
    std::size_t warmup = 3;
};

std::vector<std::size_t> flows(const std::vector<Field>& x, const std::vector<double>& e,
                               const FlowsParams& p);
std::vector<std::size_t> surge(const std::vector<double>& a, const SurgeParams& p);

/// Two-pass sample correlation with the constant-field policy (1 for equal
/// constants, 0 otherwise).
double correlation(const Field& a, const Field& b);

}  // namespace oracle
