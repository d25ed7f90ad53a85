#pragma once

#include <antic/grid.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace antic {

/// Per-timestep scalar activity signal (enstrophy, surge magnitude, ...).
struct ActivitySeries {
    std::vector<double> values;
    std::string label;

    std::size_t size() const noexcept { return values.size(); }
    double operator[](std::size_t t) const { return values[t]; }
};

enum class SaliencyKind {
    Enstrophy,
    Surge,
    JSD,
    ResidualEntropy,
    SpectralEntropy,
    MutualInfo,
    Momentum,
};

inline constexpr SaliencyKind kAllSaliencyKinds[] = {
    SaliencyKind::Enstrophy,       SaliencyKind::Surge,           SaliencyKind::JSD,
    SaliencyKind::ResidualEntropy, SaliencyKind::SpectralEntropy, SaliencyKind::MutualInfo,
    SaliencyKind::Momentum,
};

std::string_view to_string(SaliencyKind kind) noexcept;
/// Accepts the names produced by to_string (case-insensitive). Throws ConfigError.
SaliencyKind parse_saliency_kind(std::string_view name);

/// True for the two physics metrics, which are functions of one snapshot.
bool is_physics_metric(SaliencyKind kind) noexcept;

/// Histogram resolution shared by the information-theoretic baselines.
inline constexpr std::size_t kSaliencyBins = 64;

/// E = 1/2 sum w_ij^2 dx dy (midpoint rule on the cell-centred grid).
double enstrophy(const Snapshot& s);

/// Area-weighted l2 magnitude sqrt(sum u^2 dx dy); the scalar activity used
/// by the surge selector when it consumes snapshots directly.
double surge_magnitude(const Snapshot& s);

/// Single-snapshot metric for Enstrophy or Surge. Throws ConfigError otherwise.
double physics_metric(SaliencyKind kind, const Snapshot& s);

/// |phi_t - phi_{t-1}|, 1 <= t < T. Throws IndexError.
double enstrophy_diff(const ActivitySeries& series, std::size_t t);

/// Caller-owned state of the momentum baseline: an exponentially weighted
/// mean of RMS frame differences.
struct MomentumState {
    double decay = 0.9;
    double ema = 0.0;
    bool primed = false;
};

/// Pairwise physics-agnostic saliency of `cur` against `prev`. Momentum
/// requires `momentum`; other kinds ignore it. For the physics kinds this
/// returns |metric(cur) - metric(prev)|. Degenerate histograms give 0.
double baseline_saliency(SaliencyKind kind, const Snapshot& prev, const Snapshot& cur,
                         MomentumState* momentum = nullptr);

// Individual baselines, exposed for testing.
double jensen_shannon(std::span<const float> a, std::span<const float> b);
double residual_entropy(std::span<const float> prev, std::span<const float> cur);
double spectral_entropy(const Snapshot& s);
double normalized_mutual_info(std::span<const float> a, std::span<const float> b);

/// Power spectrum of the mean-removed field with conjugate pairs (k, -k)
/// folded into one bin; DC excluded. Returned in canonical-bin order.
std::vector<double> folded_power_spectrum(const Snapshot& s);

}  // namespace antic
