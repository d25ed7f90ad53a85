#pragma once

// Synthetic trajectories for desk-scale experiments.
//
// The flow generator is a closed-form superposition of Fourier modes on the
// periodic box [0, 2pi]^2:
//
//   w(x, t) = sum_m a_m exp(-nu |k_m|^2 t) cos(k_m . x + phi_m + Omega_m t)
//
// with distinct integer wavevectors (no two antipodal) drawn from the annulus
// max(1, k_p/2) <= |k| <= 3 k_p / 2. Because the modes are orthogonal on the
// sample grid, the discrete enstrophy equals analytic_enstrophy() up to
// float rounding.
//
// All randomness comes from antic::Rng (mt19937_64), so a seed reproduces
// the same trajectory on every platform.

#include <antic/grid.hpp>
#include <antic/metrics.hpp>

#include <cstdint>
#include <numbers>
#include <vector>

namespace antic {

struct FlowGenConfig {
    std::size_t resolution = 64;  // N, grid N x N
    std::size_t n_steps = 100;    // T
    double viscosity = 0.02;      // nu
    std::size_t n_modes = 16;
    int peak_wavenumber = 8;
    std::uint64_t seed = 0;
    double dt = 0.05;    // simulation time per step
    double drift = 1.0;  // phase rate scale, Omega_m = drift |k_m| U[0.5, 1.5]

    /// Throws ConfigError.
    void validate() const;
};

struct FourierMode {
    int kx;
    int ky;
    double amplitude;
    double phase;
    double rate;

    double k2() const noexcept { return static_cast<double>(kx * kx + ky * ky); }
};

/// The mode set a config expands to. Throws ConfigError when the annulus
/// holds fewer than n_modes admissible wavevectors.
std::vector<FourierMode> flow_modes(const FlowGenConfig& cfg);

inline Domain periodic_box() { return {0.0, 2.0 * std::numbers::pi, 0.0, 2.0 * std::numbers::pi}; }

/// Lazily evaluates one snapshot per next() call.
class DecayingFlowSource final : public SnapshotSource {
public:
    explicit DecayingFlowSource(const FlowGenConfig& cfg);
    std::optional<Snapshot> next() override;
    std::optional<std::size_t> length_hint() const override { return cfg_.n_steps; }

    const std::vector<FourierMode>& modes() const noexcept { return modes_; }

private:
    FlowGenConfig cfg_;
    std::vector<FourierMode> modes_;
    std::vector<double> coords_;  // cell-centre coordinates along one axis
    std::size_t step_ = 0;
};

DecayingFlowSource gen_decaying_flow(const FlowGenConfig& cfg);

/// Snapshot at an arbitrary step, independent of any stream.
Snapshot flow_snapshot(const FlowGenConfig& cfg, std::size_t step);

/// Closed-form E(t) for every step: 1/2 (|D|/2) sum_m a_m^2 exp(-2 nu k^2 t).
ActivitySeries analytic_enstrophy(const FlowGenConfig& cfg);

struct ChirpConfig {
    std::size_t length = 600;  // T
    std::size_t t_merger = 400;
    double baseline = 1.0;        // a0
    double peak_amplitude = 50.0;  // A_pk
    double envelope_width = 30.0;  // sigma_env
    double noise_std = 0.0;
    std::uint64_t seed = 0;
    double base_frequency = 0.05;  // omega0, radians per index

    void validate() const;
};

/// exp(-(t - t_m)^2 / (2 sigma^2)).
double chirp_envelope(const ChirpConfig& cfg, double t);

/// omega(t) = omega0 (1 + 3 min(t, t_m) / t_m): rises toward the merger,
/// constant afterwards.
double chirp_frequency(const ChirpConfig& cfg, double t);

/// a_t = a0 + (A_pk - a0) env(t) |sin(omega(t) t)| + N(0, noise_std^2).
ActivitySeries gen_chirp_activity(const ChirpConfig& cfg);

}  // namespace antic
