#include <antic/datagen.hpp>
#include <antic/rng.hpp>

#include <cmath>
#include <string>

namespace antic {

void FlowGenConfig::validate() const {
    if (resolution < 16) throw ConfigError("resolution must be >= 16");
    if (n_steps < 2) throw ConfigError("n_steps must be >= 2");
    if (!(viscosity > 0.0) || !std::isfinite(viscosity)) throw ConfigError("viscosity must be > 0");
    if (n_modes < 1) throw ConfigError("n_modes must be >= 1");
    if (peak_wavenumber < 1) throw ConfigError("peak_wavenumber must be >= 1");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be > 0");
    if (!std::isfinite(drift)) throw ConfigError("drift must be finite");
}

std::vector<FourierMode> flow_modes(const FlowGenConfig& cfg) {
    cfg.validate();
    const double k_lo = std::max(1.0, cfg.peak_wavenumber / 2.0);
    const double k_hi = 1.5 * cfg.peak_wavenumber;
    const int nyquist = static_cast<int>(cfg.resolution / 2);
    const int reach = static_cast<int>(std::ceil(k_hi));

    // Upper half-plane only, so no candidate is the antipode of another.
    std::vector<std::pair<int, int>> candidates;
    for (int ky = 0; ky <= reach; ++ky)
        for (int kx = -reach; kx <= reach; ++kx) {
            if (ky == 0 && kx <= 0) continue;
            if (std::abs(kx) >= nyquist || ky >= nyquist) continue;
            const double k = std::sqrt(static_cast<double>(kx * kx + ky * ky));
            if (k >= k_lo && k <= k_hi) candidates.emplace_back(kx, ky);
        }
    if (candidates.size() < cfg.n_modes)
        throw ConfigError("only " + std::to_string(candidates.size()) +
                          " admissible wavevectors for n_modes=" + std::to_string(cfg.n_modes));

    Rng rng(cfg.seed);
    rng.shuffle(std::span(candidates));
    const double norm = std::sqrt(2.0 / static_cast<double>(cfg.n_modes));
    std::vector<FourierMode> modes;
    modes.reserve(cfg.n_modes);
    for (std::size_t m = 0; m < cfg.n_modes; ++m) {
        FourierMode mode{candidates[m].first, candidates[m].second, 0.0, 0.0, 0.0};
        mode.amplitude = norm * rng.uniform(0.5, 1.5);
        mode.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        mode.rate = cfg.drift * std::sqrt(mode.k2()) * rng.uniform(0.5, 1.5);
        modes.push_back(mode);
    }
    return modes;
}

namespace {

std::vector<double> cell_centres(std::size_t n) {
    std::vector<double> c(n);
    const double h = 2.0 * std::numbers::pi / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) c[j] = (static_cast<double>(j) + 0.5) * h;
    return c;
}

Snapshot evaluate(const FlowGenConfig& cfg, const std::vector<FourierMode>& modes,
                  const std::vector<double>& coords, std::size_t step) {
    const std::size_t n = cfg.resolution;
    const double t = static_cast<double>(step) * cfg.dt;
    std::vector<double> acc(n * n, 0.0);
    std::vector<double> cx(n), sx(n);
    for (const FourierMode& m : modes) {
        const double amp = m.amplitude * std::exp(-cfg.viscosity * m.k2() * t);
        if (amp == 0.0) continue;
        const double shift = m.phase + m.rate * t;
        // cos(a + b) = cos a cos b - sin a sin b keeps the inner loop trig-free.
        for (std::size_t j = 0; j < n; ++j) {
            cx[j] = std::cos(m.kx * coords[j] + shift);
            sx[j] = std::sin(m.kx * coords[j] + shift);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double cy = amp * std::cos(m.ky * coords[i]);
            const double sy = amp * std::sin(m.ky * coords[i]);
            double* row = acc.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) row[j] += cx[j] * cy - sx[j] * sy;
        }
    }
    std::vector<float> values(acc.begin(), acc.end());
    return Snapshot({n, n}, std::move(values), periodic_box(), step, t);
}

}  // namespace

DecayingFlowSource::DecayingFlowSource(const FlowGenConfig& cfg)
    : cfg_(cfg), modes_(flow_modes(cfg)), coords_(cell_centres(cfg.resolution)) {}

std::optional<Snapshot> DecayingFlowSource::next() {
    if (step_ >= cfg_.n_steps) return std::nullopt;
    return evaluate(cfg_, modes_, coords_, step_++);
}

DecayingFlowSource gen_decaying_flow(const FlowGenConfig& cfg) { return DecayingFlowSource(cfg); }

Snapshot flow_snapshot(const FlowGenConfig& cfg, std::size_t step) {
    if (step >= cfg.n_steps) throw IndexError("step outside trajectory");
    return evaluate(cfg, flow_modes(cfg), cell_centres(cfg.resolution), step);
}

ActivitySeries analytic_enstrophy(const FlowGenConfig& cfg) {
    const auto modes = flow_modes(cfg);
    const Domain d = periodic_box();
    const double area = d.width() * d.height();
    ActivitySeries series{std::vector<double>(cfg.n_steps), "enstrophy"};
    for (std::size_t s = 0; s < cfg.n_steps; ++s) {
        const double t = static_cast<double>(s) * cfg.dt;
        double sum = 0.0;
        for (const FourierMode& m : modes)
            sum += m.amplitude * m.amplitude * std::exp(-2.0 * cfg.viscosity * m.k2() * t);
        series.values[s] = 0.25 * area * sum;
    }
    return series;
}

void ChirpConfig::validate() const {
    if (length < 2) throw ConfigError("chirp length must be >= 2");
    if (t_merger == 0 || t_merger >= length) throw ConfigError("t_merger must lie in (0, T)");
    if (!(baseline > 0.0)) throw ConfigError("baseline level must be > 0");
    if (!(peak_amplitude > baseline)) throw ConfigError("peak amplitude must exceed baseline");
    if (!(envelope_width > 0.0)) throw ConfigError("envelope width must be > 0");
    if (!(noise_std >= 0.0)) throw ConfigError("noise_std must be >= 0");
    if (!(base_frequency > 0.0)) throw ConfigError("base frequency must be > 0");
}

double chirp_envelope(const ChirpConfig& cfg, double t) {
    const double d = t - static_cast<double>(cfg.t_merger);
    return std::exp(-d * d / (2.0 * cfg.envelope_width * cfg.envelope_width));
}

double chirp_frequency(const ChirpConfig& cfg, double t) {
    const double tm = static_cast<double>(cfg.t_merger);
    return cfg.base_frequency * (1.0 + 3.0 * std::min(t, tm) / tm);
}

ActivitySeries gen_chirp_activity(const ChirpConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    ActivitySeries series{std::vector<double>(cfg.length), "surge"};
    for (std::size_t i = 0; i < cfg.length; ++i) {
        const double t = static_cast<double>(i);
        double a = cfg.baseline + (cfg.peak_amplitude - cfg.baseline) * chirp_envelope(cfg, t) *
                                      std::abs(std::sin(chirp_frequency(cfg, t) * t));
        if (cfg.noise_std > 0.0) a += rng.normal(0.0, cfg.noise_std);
        series.values[i] = a;
    }
    return series;
}

}  // namespace antic
