#include <antic/selector.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <string>

namespace antic {

std::string_view to_string(SelectorMode mode) noexcept {
    switch (mode) {
        case SelectorMode::DynamicFlows: return "flows";
        case SelectorMode::SurgeDetector: return "surge";
        case SelectorMode::BinaryRegulator: return "binary";
        case SelectorMode::Baseline: return "baseline";
    }
    return "unknown";
}

SelectorMode parse_selector_mode(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    for (auto m : {SelectorMode::DynamicFlows, SelectorMode::SurgeDetector,
                   SelectorMode::BinaryRegulator, SelectorMode::Baseline})
        if (lower == to_string(m)) return m;
    throw ConfigError("unknown selector mode '" + std::string(name) +
                      "' (expected flows, surge, binary, baseline)");
}

void SelectorConfig::validate() const {
    if (window < 1) throw ConfigError("window must be >= 1");
    if (!(corr_threshold > -1.0 && corr_threshold <= 1.0))
        throw ConfigError("corr_threshold must lie in (-1, 1]");
    if (!(eps > 0.0)) throw ConfigError("eps must be > 0");
    if (mode == SelectorMode::SurgeDetector) {
        if (!(surge_factor > 1.0)) throw ConfigError("surge factor must be > 1");
        if (patience < 1) throw ConfigError("patience must be >= 1");
        if (history_maxlen < 1) throw ConfigError("history maxlen must be >= 1");
        if (warmup < 1) throw ConfigError("warmup must be >= 1");
        if (warmup > history_maxlen) throw ConfigError("warmup must not exceed history maxlen");
    }
    if (std::isnan(binary_threshold) || std::isnan(baseline_threshold))
        throw ConfigError("thresholds must not be NaN");
}

double default_baseline_threshold(SaliencyKind kind) noexcept {
    switch (kind) {
        case SaliencyKind::Enstrophy: return 0.5;
        case SaliencyKind::Surge: return 0.5;
        case SaliencyKind::JSD: return 0.1;
        case SaliencyKind::ResidualEntropy: return 0.0;
        case SaliencyKind::SpectralEntropy: return 3.0;
        case SaliencyKind::MutualInfo: return 0.5;
        case SaliencyKind::Momentum: return 0.5;
    }
    return 0.0;
}

bool SelectionResult::contains(std::size_t t) const {
    return std::binary_search(indices.begin(), indices.end(), t);
}

double stability_factor(std::span<const double> deltas, double eps) {
    if (deltas.empty()) throw ConfigError("stability factor of an empty window");
    double sum = 0.0, mx = 0.0;
    for (double d : deltas) {
        sum += d;
        mx = std::max(mx, d);
    }
    const double mean = sum / static_cast<double>(deltas.size());
    return std::sqrt(mx / (mean + eps));
}

double gated_correlation(const Snapshot& a, const Snapshot& b, bool* degenerate) {
    if (degenerate) *degenerate = false;
    try {
        return pearson(a, b);
    } catch (const DegenerateInputError&) {
        if (degenerate) *degenerate = true;
        const auto va = a.values(), vb = b.values();
        const bool same_constant =
            std::all_of(va.begin(), va.end(), [&](float v) { return v == va[0]; }) &&
            std::all_of(vb.begin(), vb.end(), [&](float v) { return v == va[0]; });
        return same_constant ? 1.0 : 0.0;
    }
}

// ---------------------------------------------------------------------------

StreamCursor::StreamCursor(SnapshotSource& source, MetricFn metric)
    : source_(&source), metric_(std::move(metric)) {}

StreamCursor::StreamCursor(SnapshotSource& source, const ActivitySeries& series)
    : source_(&source), series_(&series) {}

StreamCursor::StreamCursor(const ActivitySeries& series) : series_(&series) {}

bool StreamCursor::ensure(std::size_t k) {
    if (k < base_) throw IndexError("position " + std::to_string(k) + " already released");
    while (next_ <= k) {
        if (end_) return false;
        Entry e{std::nullopt, 0.0};
        if (source_) {
            auto snap = source_->next();
            if (!snap) {
                end_ = next_;
                if (series_ && series_->size() != next_)
                    throw ShapeMismatchError("trajectory has " + std::to_string(next_) +
                                             " snapshots but the series has " +
                                             std::to_string(series_->size()));
                return false;
            }
            if (series_) {
                if (next_ >= series_->size())
                    throw ShapeMismatchError("trajectory is longer than the series (" +
                                             std::to_string(series_->size()) + ")");
                e.phi = (*series_)[next_];
            } else {
                e.phi = metric_(*snap);
            }
            e.snapshot = std::move(snap);
        } else {
            if (next_ >= series_->size()) {
                end_ = next_;
                return false;
            }
            e.phi = (*series_)[next_];
        }
        buffer_.push_back(std::move(e));
        ++next_;
        peak_ = std::max(peak_, buffer_.size());
    }
    return true;
}

const StreamCursor::Entry& StreamCursor::entry(std::size_t k) const {
    if (k < base_ || k >= next_) throw IndexError("position " + std::to_string(k) + " not buffered");
    return buffer_[k - base_];
}

double StreamCursor::phi(std::size_t k) const { return entry(k).phi; }

const Snapshot* StreamCursor::snapshot(std::size_t k) const {
    const Entry& e = entry(k);
    return e.snapshot ? &*e.snapshot : nullptr;
}

void StreamCursor::release_before(std::size_t k) {
    while (base_ < k && !buffer_.empty()) {
        buffer_.pop_front();
        ++base_;
    }
}

std::size_t StreamCursor::drain() {
    while (!end_) ensure(next_);
    return *end_;
}

namespace {

class Recorder {
public:
    Recorder(StreamCursor& cursor, const SelectCallback& cb) : cursor_(cursor), cb_(cb) {}

    void select(std::size_t t) {
        result.indices.push_back(t);
        if (cb_) cb_(t, cursor_.snapshot(t));
    }

    SelectionResult finish(std::size_t length) {
        result.length = length;
        for (std::size_t i = 1; i < result.indices.size(); ++i)
            result.strides.push_back(result.indices[i] - result.indices[i - 1]);
        result.retention = static_cast<double>(result.indices.size()) / static_cast<double>(length);
        result.peak_buffered = cursor_.peak();
        return std::move(result);
    }

    SelectionResult result;

private:
    StreamCursor& cursor_;
    const SelectCallback& cb_;
};

void require_nonempty(StreamCursor& cursor) {
    if (!cursor.ensure(0)) throw ShapeMismatchError("empty trajectory");
}

SelectionResult run_flows(StreamCursor& cursor, const SelectorConfig& cfg, const SelectCallback& cb) {
    cfg.validate();
    require_nonempty(cursor);
    Recorder rec(cursor, cb);
    rec.select(0);

    const std::size_t q_max = cfg.window;
    std::deque<std::size_t> queue;
    std::vector<double> deltas;
    std::size_t s = 0;
    // The queue is seeded with s+1 on the first pass, so every evaluation
    // sees the queue front at s+1.
    std::size_t last = 0;

    while (cursor.ensure(s + 1)) {
        const bool full = queue.size() == q_max;
        const bool at_end = !full && !cursor.ensure(last + 1);
        if (full || at_end) {
            std::size_t best = s + 1;
            if (!queue.empty()) {
                deltas.clear();
                for (std::size_t t : queue) deltas.push_back(std::abs(cursor.phi(t) - cursor.phi(t - 1)));
                const double eta = stability_factor(deltas, cfg.eps);
                const double de0 = std::abs(cursor.phi(s + 1) - cursor.phi(s));
                const Snapshot* anchor = cursor.snapshot(s);
                for (std::size_t i : queue) {
                    const double de = std::abs(cursor.phi(i) - cursor.phi(s));
                    bool degenerate = false;
                    const double rho = gated_correlation(*cursor.snapshot(i), *anchor, &degenerate);
                    if (degenerate) ++rec.result.degenerate_correlations;
                    if (de / (de0 + cfg.eps) <= eta && rho >= cfg.corr_threshold)
                        best = i;
                    else
                        break;
                }
            }
            s = best;
            rec.select(s);
            while (!queue.empty() && queue.front() <= s) queue.pop_front();
            cursor.release_before(s);
            if (at_end) continue;
        }
        if (cursor.ensure(last + 1)) queue.push_back(++last);
    }
    return rec.finish(s + 1);
}

double median(std::deque<double> h) {
    std::sort(h.begin(), h.end());
    const std::size_t n = h.size();
    return n % 2 ? h[n / 2] : 0.5 * (h[n / 2 - 1] + h[n / 2]);
}

SelectionResult run_surge(StreamCursor& cursor, const SelectorConfig& cfg, const SelectCallback& cb) {
    cfg.validate();
    require_nonempty(cursor);
    if (!cursor.ensure(1)) throw ShapeMismatchError("surge selector needs at least 2 samples");
    Recorder rec(cursor, cb);
    rec.select(0);

    std::deque<double> history;
    std::size_t surge_count = 0;
    std::size_t t = 0;
    while (cursor.ensure(t + 1)) {
        std::size_t next;
        if (history.size() < cfg.warmup) {
            next = t + 1;
            surge_count = 0;
        } else {
            const double limit = cfg.surge_factor * median(history);
            if (cursor.phi(t + 1) > limit) {
                next = t + 1;
                ++surge_count;
            } else {
                surge_count = 0;
                std::size_t cand = t + 1;
                for (std::size_t k = t + 2; k <= t + cfg.window && cursor.ensure(k); ++k) cand = k;
                next = cand;
                for (std::size_t k = t + 1; k <= cand; ++k)
                    if (cursor.phi(k) > limit) {
                        next = k;
                        break;
                    }
            }
        }
        cursor.release_before(next);
        t = next;
        rec.select(t);
        if (surge_count == 0 || surge_count > cfg.patience) {
            history.push_back(cursor.phi(t));
            if (history.size() > cfg.history_maxlen) history.pop_front();
            if (surge_count > cfg.patience) surge_count = 0;
        }
    }
    return rec.finish(t + 1);
}

SelectionResult run_binary(StreamCursor& cursor, const SelectorConfig& cfg, const SelectCallback& cb) {
    cfg.validate();
    require_nonempty(cursor);
    Recorder rec(cursor, cb);
    rec.select(0);
    std::size_t t = 0;
    while (cursor.ensure(t + 1)) {
        double agg = 0.0;
        std::size_t far = t;
        for (std::size_t k = t + 1; k <= t + cfg.window && cursor.ensure(k); ++k) {
            const double d = std::abs(cursor.phi(k) - cursor.phi(k - 1));
            agg = cfg.aggregate == WindowAggregate::Max ? std::max(agg, d) : agg + d;
            far = k;
        }
        if (cfg.aggregate == WindowAggregate::Mean) agg /= static_cast<double>(far - t);
        const std::size_t next = agg <= cfg.binary_threshold ? far : t + 1;
        cursor.release_before(next);
        t = next;
        rec.select(t);
    }
    return rec.finish(t + 1);
}

StreamCursor::MetricFn metric_fn(SaliencyKind kind) {
    if (!is_physics_metric(kind))
        throw ConfigError(std::string(to_string(kind)) + " is not a per-snapshot physics metric");
    return [kind](const Snapshot& s) { return physics_metric(kind, s); };
}

}  // namespace

SelectionResult select_flows(SnapshotSource& trajectory, const ActivitySeries& enstrophy,
                             const SelectorConfig& cfg, const SelectCallback& on_select) {
    CheckedTrajectory checked(trajectory);
    StreamCursor cursor(checked, enstrophy);
    auto result = run_flows(cursor, cfg, on_select);
    cursor.drain();
    return result;
}

SelectionResult select_flows(SnapshotSource& trajectory, const SelectorConfig& cfg,
                             const SelectCallback& on_select) {
    CheckedTrajectory checked(trajectory);
    StreamCursor cursor(checked, metric_fn(SaliencyKind::Enstrophy));
    return run_flows(cursor, cfg, on_select);
}

SelectionResult select_surge(const ActivitySeries& activity, const SelectorConfig& cfg,
                             const SelectCallback& on_select) {
    StreamCursor cursor(activity);
    return run_surge(cursor, cfg, on_select);
}

SelectionResult select_surge(SnapshotSource& trajectory, SaliencyKind metric,
                             const SelectorConfig& cfg, const SelectCallback& on_select) {
    CheckedTrajectory checked(trajectory);
    StreamCursor cursor(checked, metric_fn(metric));
    return run_surge(cursor, cfg, on_select);
}

SelectionResult select_binary(const ActivitySeries& activity, const SelectorConfig& cfg,
                              const SelectCallback& on_select) {
    StreamCursor cursor(activity);
    return run_binary(cursor, cfg, on_select);
}

SelectionResult select_binary(SnapshotSource& trajectory, SaliencyKind metric,
                              const SelectorConfig& cfg, const SelectCallback& on_select) {
    CheckedTrajectory checked(trajectory);
    StreamCursor cursor(checked, metric_fn(metric));
    return run_binary(cursor, cfg, on_select);
}

SelectionResult select_baseline(SnapshotSource& trajectory, const SelectorConfig& cfg,
                                const SelectCallback& on_select) {
    cfg.validate();
    CheckedTrajectory checked(trajectory);
    StreamCursor cursor(checked, [](const Snapshot&) { return 0.0; });
    require_nonempty(cursor);
    Recorder rec(cursor, on_select);
    rec.select(0);

    MomentumState momentum;
    std::optional<Snapshot> last = *cursor.snapshot(0);
    std::size_t t = 1;
    for (; cursor.ensure(t); ++t) {
        const Snapshot& cur = *cursor.snapshot(t);
        const double saliency = baseline_saliency(cfg.baseline_kind, *last, cur, &momentum);
        const bool final = !cursor.ensure(t + 1);
        if (saliency > cfg.baseline_threshold || final) {
            rec.select(t);
            last = cur;
        }
        cursor.release_before(t + 1);
    }
    return rec.finish(t);
}

SelectionResult select(SnapshotSource& trajectory, const SelectorConfig& cfg,
                       const SelectCallback& on_select) {
    switch (cfg.mode) {
        case SelectorMode::DynamicFlows: return select_flows(trajectory, cfg, on_select);
        case SelectorMode::SurgeDetector:
            return select_surge(trajectory, SaliencyKind::Surge, cfg, on_select);
        case SelectorMode::BinaryRegulator:
            return select_binary(trajectory, SaliencyKind::Enstrophy, cfg, on_select);
        case SelectorMode::Baseline: return select_baseline(trajectory, cfg, on_select);
    }
    throw ConfigError("unknown selector mode");
}

}  // namespace antic
