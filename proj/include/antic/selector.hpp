#pragma once

// Physics-aware temporal selection. Every engine consumes its input in one
// forward pass and reports selected stream positions in increasing order;
// `on_select` fires as soon as an index is decided, with the snapshot when
// the engine reads from a trajectory.

#include <antic/grid.hpp>
#include <antic/metrics.hpp>

#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

namespace antic {

enum class SelectorMode { DynamicFlows, SurgeDetector, BinaryRegulator, Baseline };

std::string_view to_string(SelectorMode mode) noexcept;
SelectorMode parse_selector_mode(std::string_view name);

enum class WindowAggregate { Max, Mean };

struct SelectorConfig {
    SelectorMode mode = SelectorMode::DynamicFlows;
    std::size_t window = 5;        // W, also the flows queue size Q
    double corr_threshold = 0.9;   // tau
    double eps = 1e-9;
    double surge_factor = 3.0;     // gamma
    std::size_t patience = 4;      // P
    std::size_t history_maxlen = 8;
    std::size_t warmup = 3;
    // Binary regulator: dense stride whenever the window aggregate of
    // |phi_k - phi_{k-1}| exceeds binary_threshold.
    WindowAggregate aggregate = WindowAggregate::Max;
    double binary_threshold = 0.0;
    // Baseline: retain t when saliency(last retained, t) > baseline_threshold.
    SaliencyKind baseline_kind = SaliencyKind::JSD;
    double baseline_threshold = 0.1;

    /// Throws ConfigError.
    void validate() const;
};

/// Default baseline thresholds, calibrated once on the generator corpus
/// (N=64, T=100, nu=0.02, k_p=8, seeds 0..4).
double default_baseline_threshold(SaliencyKind kind) noexcept;

struct SelectionResult {
    std::vector<std::size_t> indices;  // strictly increasing, starts at 0
    std::vector<std::size_t> strides;  // indices[i+1] - indices[i]
    std::size_t length = 0;            // T
    double retention = 0.0;            // |indices| / T
    std::size_t degenerate_correlations = 0;
    std::size_t peak_buffered = 0;  // most snapshots resident at once

    bool contains(std::size_t t) const;
};

using SelectCallback = std::function<void(std::size_t index, const Snapshot* snapshot)>;

/// eta = sqrt(max(deltas) / (mean(deltas) + eps)). Throws ConfigError on empty input.
double stability_factor(std::span<const double> deltas, double eps);

/// Pearson with the selector's policy for constant fields: 1 when both are
/// the same constant, 0 otherwise. Sets *degenerate when the policy applied.
double gated_correlation(const Snapshot& a, const Snapshot& b, bool* degenerate = nullptr);

/// Look-ahead window over a trajectory with per-position scalar metric. Holds
/// only the positions between the oldest unreleased index and the furthest
/// one requested, and tracks the peak count.
class StreamCursor {
public:
    using MetricFn = std::function<double(const Snapshot&)>;

    /// Metric from a function of each snapshot.
    StreamCursor(SnapshotSource& source, MetricFn metric);
    /// Metric read from a precomputed series aligned with the stream.
    StreamCursor(SnapshotSource& source, const ActivitySeries& series);
    /// Series only, no snapshots.
    explicit StreamCursor(const ActivitySeries& series);

    /// True when position k exists; pulls from the source as needed.
    bool ensure(std::size_t k);
    double phi(std::size_t k) const;
    /// nullptr for a series-only cursor.
    const Snapshot* snapshot(std::size_t k) const;
    /// Drops every position below k.
    void release_before(std::size_t k);

    /// Length once the end has been seen.
    std::optional<std::size_t> length() const noexcept { return end_; }
    /// Pulls until the end and returns T. Only valid for series-only cursors
    /// or when the caller no longer needs the window bounded.
    std::size_t drain();
    std::size_t peak() const noexcept { return peak_; }
    std::size_t pulled() const noexcept { return next_; }

private:
    struct Entry {
        std::optional<Snapshot> snapshot;
        double phi;
    };
    const Entry& entry(std::size_t k) const;

    SnapshotSource* source_ = nullptr;
    MetricFn metric_;
    const ActivitySeries* series_ = nullptr;
    std::deque<Entry> buffer_;
    std::size_t base_ = 0;  // position of buffer_.front()
    std::size_t next_ = 0;  // next position to pull
    std::optional<std::size_t> end_;
    std::size_t peak_ = 0;
};

/// Dynamic flows selector (queue, stability gate and structural correlation
/// gate) over a trajectory and its enstrophy series. Throws
/// ShapeMismatchError when the lengths differ.
SelectionResult select_flows(SnapshotSource& trajectory, const ActivitySeries& enstrophy,
                             const SelectorConfig& cfg, const SelectCallback& on_select = {});
/// Same, computing enstrophy from each snapshot as it arrives.
SelectionResult select_flows(SnapshotSource& trajectory, const SelectorConfig& cfg,
                             const SelectCallback& on_select = {});

/// Median-baseline surge detector over a precomputed activity series.
SelectionResult select_surge(const ActivitySeries& activity, const SelectorConfig& cfg,
                             const SelectCallback& on_select = {});
/// Same, with activity = metric(snapshot) computed on the stream.
SelectionResult select_surge(SnapshotSource& trajectory, SaliencyKind metric,
                             const SelectorConfig& cfg, const SelectCallback& on_select = {});

/// Bang-bang regulator: stride W (clamped to the last index) when the window
/// aggregate is at most the threshold, else stride 1.
SelectionResult select_binary(const ActivitySeries& activity, const SelectorConfig& cfg,
                              const SelectCallback& on_select = {});
SelectionResult select_binary(SnapshotSource& trajectory, SaliencyKind metric,
                              const SelectorConfig& cfg, const SelectCallback& on_select = {});

/// Threshold on a pairwise saliency against the last retained snapshot.
/// Index 0 and the final index are always retained.
SelectionResult select_baseline(SnapshotSource& trajectory, const SelectorConfig& cfg,
                                const SelectCallback& on_select = {});

/// Dispatches on cfg.mode. Flows and binary use enstrophy, surge uses the
/// surge magnitude.
SelectionResult select(SnapshotSource& trajectory, const SelectorConfig& cfg,
                       const SelectCallback& on_select = {});

}  // namespace antic
