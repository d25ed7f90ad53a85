#include <antic/kernels/kernels.hpp>
#include <antic/metrics.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <complex>
#include <numbers>

namespace antic {

namespace {

struct Range {
    double lo;
    double hi;
    bool degenerate() const { return !(hi > lo); }
};

Range range_of(std::span<const float> v) {
    auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    return {*mn, *mx};
}

std::size_t bin_of(double v, const Range& r) {
    const double u = (v - r.lo) / (r.hi - r.lo) * static_cast<double>(kSaliencyBins);
    const auto b = static_cast<long>(std::floor(u));
    return static_cast<std::size_t>(std::clamp<long>(b, 0, kSaliencyBins - 1));
}

using Hist = std::array<double, kSaliencyBins>;

Hist histogram(std::span<const float> v, const Range& r) {
    Hist h{};
    for (float x : v) h[bin_of(x, r)] += 1.0;
    for (double& c : h) c /= static_cast<double>(v.size());
    return h;
}

double shannon(std::span<const double> p) {
    double h = 0.0;
    for (double x : p)
        if (x > 0.0) h -= x * std::log(x);
    return h;
}

std::size_t occupied(const Hist& h) {
    return static_cast<std::size_t>(std::count_if(h.begin(), h.end(), [](double c) { return c > 0.0; }));
}

}  // namespace

std::string_view to_string(SaliencyKind kind) noexcept {
    switch (kind) {
        case SaliencyKind::Enstrophy: return "enstrophy";
        case SaliencyKind::Surge: return "surge";
        case SaliencyKind::JSD: return "jsd";
        case SaliencyKind::ResidualEntropy: return "residual";
        case SaliencyKind::SpectralEntropy: return "spectral";
        case SaliencyKind::MutualInfo: return "mi";
        case SaliencyKind::Momentum: return "momentum";
    }
    return "unknown";
}

SaliencyKind parse_saliency_kind(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    for (SaliencyKind k : kAllSaliencyKinds)
        if (lower == to_string(k)) return k;
    throw ConfigError("unknown metric '" + std::string(name) +
                      "' (expected enstrophy, surge, jsd, residual, spectral, mi, momentum)");
}

bool is_physics_metric(SaliencyKind kind) noexcept {
    return kind == SaliencyKind::Enstrophy || kind == SaliencyKind::Surge;
}

double enstrophy(const Snapshot& s) {
    return 0.5 * kernels::sum_sq(s.values()) * s.dx() * s.dy();
}

double surge_magnitude(const Snapshot& s) {
    return std::sqrt(kernels::sum_sq(s.values()) * s.dx() * s.dy());
}

double physics_metric(SaliencyKind kind, const Snapshot& s) {
    switch (kind) {
        case SaliencyKind::Enstrophy: return enstrophy(s);
        case SaliencyKind::Surge: return surge_magnitude(s);
        default: break;
    }
    throw ConfigError(std::string(to_string(kind)) + " is not a single-snapshot physics metric");
}

double enstrophy_diff(const ActivitySeries& series, std::size_t t) {
    if (t == 0 || t >= series.size())
        throw IndexError("enstrophy_diff index " + std::to_string(t) + " outside [1, " +
                         std::to_string(series.size()) + ")");
    return std::abs(series[t] - series[t - 1]);
}

double jensen_shannon(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size() || a.empty()) throw ShapeMismatchError("jsd inputs differ in size");
    const Range ra = range_of(a), rb = range_of(b);
    const Range pooled{std::min(ra.lo, rb.lo), std::max(ra.hi, rb.hi)};
    if (pooled.degenerate()) return 0.0;
    const Hist p = histogram(a, pooled);
    const Hist q = histogram(b, pooled);
    double js = 0.0;
    for (std::size_t i = 0; i < kSaliencyBins; ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        if (p[i] > 0.0) js += 0.5 * p[i] * std::log(p[i] / m);
        if (q[i] > 0.0) js += 0.5 * q[i] * std::log(q[i] / m);
    }
    return std::max(js, 0.0);
}

double residual_entropy(std::span<const float> prev, std::span<const float> cur) {
    if (prev.size() != cur.size() || cur.empty())
        throw ShapeMismatchError("residual inputs differ in size");
    std::vector<float> r(cur.size());
    for (std::size_t i = 0; i < cur.size(); ++i) r[i] = cur[i] - prev[i];
    const Range rr = range_of(r);
    if (rr.degenerate()) return 0.0;
    const Hist h = histogram(r, rr);
    if (occupied(h) < 2) return 0.0;
    const double width = (rr.hi - rr.lo) / static_cast<double>(kSaliencyBins);
    return shannon(h) + std::log(width);
}

std::vector<double> folded_power_spectrum(const Snapshot& s) {
    const std::size_t rows = s.rows(), cols = s.cols();
    using cd = std::complex<double>;
    auto twiddles = [](std::size_t n) {
        std::vector<cd> w(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
            w[k] = {std::cos(ang), std::sin(ang)};
        }
        return w;
    };
    const auto wc = twiddles(cols);
    const auto wr = twiddles(rows);

    // The mean only feeds the dropped DC bin; removing it keeps rounding
    // noise out of the others.
    double mean = 0.0;
    for (float v : s.values()) mean += v;
    mean /= static_cast<double>(s.size());

    // Separable DFT: rows, then columns. O(N^3) is fine at desk scale.
    std::vector<cd> tmp(rows * cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t kx = 0; kx < cols; ++kx) {
            cd acc = 0.0;
            for (std::size_t j = 0; j < cols; ++j) acc += (static_cast<double>(s.at(i, j)) - mean) * wc[(kx * j) % cols];
            tmp[i * cols + kx] = acc;
        }
    std::vector<double> power(rows * cols);
    for (std::size_t ky = 0; ky < rows; ++ky)
        for (std::size_t kx = 0; kx < cols; ++kx) {
            cd acc = 0.0;
            for (std::size_t i = 0; i < rows; ++i) acc += tmp[i * cols + kx] * wr[(ky * i) % rows];
            power[ky * cols + kx] = std::norm(acc);
        }

    std::vector<double> folded;
    folded.reserve(rows * cols / 2 + 2);
    for (std::size_t ky = 0; ky < rows; ++ky)
        for (std::size_t kx = 0; kx < cols; ++kx) {
            if (ky == 0 && kx == 0) continue;
            const std::size_t cy = (rows - ky) % rows, cx = (cols - kx) % cols;
            const std::size_t id = ky * cols + kx, cid = cy * cols + cx;
            if (cid < id) continue;  // counted with its partner
            folded.push_back(cid == id ? power[id] : power[id] + power[cid]);
        }
    return folded;
}

double spectral_entropy(const Snapshot& s) {
    auto p = folded_power_spectrum(s);
    double total = 0.0;
    for (double x : p) total += x;
    if (!(total > 0.0)) return 0.0;
    for (double& x : p) x /= total;
    return std::max(shannon(p), 0.0);
}

double normalized_mutual_info(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size() || a.empty()) throw ShapeMismatchError("mi inputs differ in size");
    const Range ra = range_of(a), rb = range_of(b);
    if (ra.degenerate() || rb.degenerate()) return 0.0;
    std::vector<double> joint(kSaliencyBins * kSaliencyBins, 0.0);
    Hist pa{}, pb{};
    const double inv = 1.0 / static_cast<double>(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const std::size_t x = bin_of(a[i], ra), y = bin_of(b[i], rb);
        joint[x * kSaliencyBins + y] += inv;
        pa[x] += inv;
        pb[y] += inv;
    }
    if (occupied(pa) < 2 || occupied(pb) < 2) return 0.0;
    const double ha = shannon(pa), hb = shannon(pb);
    double mi = 0.0;
    for (std::size_t x = 0; x < kSaliencyBins; ++x)
        for (std::size_t y = 0; y < kSaliencyBins; ++y) {
            const double p = joint[x * kSaliencyBins + y];
            if (p > 0.0) mi += p * std::log(p / (pa[x] * pb[y]));
        }
    return std::clamp(mi / std::sqrt(ha * hb), 0.0, 1.0);
}

double baseline_saliency(SaliencyKind kind, const Snapshot& prev, const Snapshot& cur,
                         MomentumState* momentum) {
    if (prev.shape() != cur.shape()) throw ShapeMismatchError("saliency inputs differ in shape");
    switch (kind) {
        case SaliencyKind::Enstrophy:
        case SaliencyKind::Surge:
            return std::abs(physics_metric(kind, cur) - physics_metric(kind, prev));
        case SaliencyKind::JSD: return jensen_shannon(prev.values(), cur.values());
        case SaliencyKind::ResidualEntropy: return residual_entropy(prev.values(), cur.values());
        case SaliencyKind::SpectralEntropy: return spectral_entropy(cur);
        case SaliencyKind::MutualInfo: return normalized_mutual_info(prev.values(), cur.values());
        case SaliencyKind::Momentum: {
            if (!momentum) throw ConfigError("momentum saliency needs caller-owned state");
            const auto pv = prev.values(), cv = cur.values();
            double ss = 0.0;
            for (std::size_t i = 0; i < pv.size(); ++i) {
                const double d = static_cast<double>(cv[i]) - pv[i];
                ss += d * d;
            }
            const double rms = std::sqrt(ss / static_cast<double>(pv.size()));
            if (!momentum->primed) {
                momentum->ema = rms;
                momentum->primed = true;
            } else {
                momentum->ema = momentum->decay * momentum->ema + (1.0 - momentum->decay) * rms;
            }
            return momentum->ema;
        }
    }
    return 0.0;
}

}  // namespace antic
