#pragma once

// Coordinate MLP neural field.
//
//   gamma(x) = [sin(2 pi B_f x), cos(2 pi B_f x)]      B_f: m/2 x 2, frozen
//   h_0 = gamma(x)
//   h_l = SiLU(W_l LN_l(h_{l-1}) + b_l)               l = 1..L
//   u   = W_head h_L + b_head
//
// Forward and backward passes are written out by hand. Everything is
// templated on the scalar type: float for training and storage, double for
// finite-difference checks.
//
// LoRA adapts every hidden affine layer and the head with W + B A (scale 1),
// B: n x r zero-initialised, A: r x k random. The head is 1 x d, so it uses
// rank 1 whatever r is requested.

#include <antic/grid.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace antic::nf {

struct NfArchitecture {
    std::size_t hidden_dim = 256;
    std::size_t n_layers = 6;
    std::size_t ffm_dim = 256;
    double ffm_frequency = 7.0;
    std::size_t in_dim = 2;
    std::size_t out_dim = 1;

    void validate() const;
    std::size_t layer_in(std::size_t l) const noexcept { return l == 0 ? ffm_dim : hidden_dim; }
    friend bool operator==(const NfArchitecture&, const NfArchitecture&) = default;
};

inline constexpr double kLayerNormEps = 1e-5;

template <class T>
struct Dense {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<T> weight;  // out x in, row-major
    std::vector<T> bias;    // out
};

template <class T>
struct HiddenLayer {
    std::vector<T> ln_scale;  // in
    std::vector<T> ln_shift;  // in
    Dense<T> dense;
};

template <class T>
struct NeuralFieldParams {
    NfArchitecture arch;
    std::vector<T> ffm;  // (m/2) x in_dim
    std::vector<HiddenLayer<T>> layers;
    Dense<T> head;

    /// Every tensor in storage order: ffm, then per layer ln_scale, ln_shift,
    /// weight, bias, then head weight, head bias.
    std::vector<std::span<T>> tensors();
    std::vector<std::span<const T>> tensors() const;
    /// Same order without the frozen ffm matrix.
    std::vector<std::span<T>> trainable();

    template <class U>
    NeuralFieldParams<U> cast() const;
};

template <class T>
struct LoraFactor {
    std::size_t n = 0;  // rows of the adapted weight (fan-out)
    std::size_t k = 0;  // columns (fan-in)
    std::size_t rank = 0;
    std::vector<T> a;  // rank x k
    std::vector<T> b;  // n x rank
};

template <class T>
struct LoraAdapter {
    std::size_t rank = 0;            // requested hidden-layer rank
    std::vector<LoraFactor<T>> factors;  // one per hidden layer, then the head

    /// a then b for each factor in order.
    std::vector<std::span<T>> tensors();
    std::vector<std::span<const T>> tensors() const;
    std::size_t count() const noexcept;

    template <class U>
    LoraAdapter<U> cast() const;
};

/// Total scalars including the frozen ffm matrix.
std::size_t param_count(const NfArchitecture& arch);
/// Scalars updated by full fine-tuning (everything but the ffm matrix).
std::size_t trainable_count(const NfArchitecture& arch);
/// Scalars of a rank-r adapter: sum of r_l (n_l + k_l).
std::size_t adapter_count(const NfArchitecture& arch, std::size_t rank);
/// Rank used for the head for a requested hidden rank.
inline std::size_t head_rank(std::size_t rank) noexcept { return rank < 1 ? rank : 1; }
/// Throws ConfigError unless 1 <= r <= min(n, k)/2 for every hidden layer.
void validate_rank(const NfArchitecture& arch, std::size_t rank);

template <class T>
NeuralFieldParams<T> init_params(const NfArchitecture& arch, std::uint64_t seed);

/// B = 0, A fan-in uniform, so the adapted network starts equal to the base.
template <class T>
LoraAdapter<T> init_adapter(const NfArchitecture& arch, std::size_t rank, std::uint64_t seed);

/// Predictions for interleaved (x, y) coordinates. Throws
/// NumericInstabilityError naming the first layer with a non-finite value.
template <class T>
std::vector<T> forward(const NeuralFieldParams<T>& params, const LoraAdapter<T>* adapter,
                       std::span<const T> coords);

template <class T>
struct LossAndGrads {
    double mse = 0.0;
    /// Aligned with params.trainable(); empty when an adapter is trained.
    std::vector<std::vector<T>> params;
    /// Aligned with adapter.tensors(); empty without an adapter.
    std::vector<std::vector<T>> adapter;
};

/// MSE over the points `batch` of the lattice against `target`, with exact
/// gradients. With an adapter only the adapter receives gradients.
template <class T>
LossAndGrads<T> loss_and_grads(const NeuralFieldParams<T>& params, const LoraAdapter<T>* adapter,
                               std::span<const float> target, const CoordinateLattice& lattice,
                               std::span<const std::size_t> batch);

/// W <- W + B A for every factor. Throws ShapeMismatchError.
template <class T>
NeuralFieldParams<T> merge_adapter(const NeuralFieldParams<T>& params, const LoraAdapter<T>& adapter);

/// Field values at every lattice point, as a snapshot with the given metadata.
Snapshot reconstruct(const NeuralFieldParams<float>& params, const CoordinateLattice& lattice,
                     GridShape shape, Domain domain = {}, std::uint64_t timestep = 0,
                     double time = 0.0);

enum class TrainMode { Scratch, FullFT, Lora };

std::string_view to_string(TrainMode mode) noexcept;
TrainMode parse_train_mode(std::string_view name);

struct TrainConfig {
    TrainMode mode = TrainMode::Scratch;
    std::size_t lora_rank = 8;
    std::size_t epochs = 200;
    std::size_t batch_size = 4096;  // grids at most this large train full-batch
    double lr_initial = 1e-3;
    double lr_final = 1e-5;
    double weight_decay = 1e-4;
    std::uint64_t seed = 0;
    /// Stop early once an epoch's loss is at or below this value.
    std::optional<double> target_mse;

    void validate() const;
    /// Defaults per mode: adapters train at lr 1e-2.
    static TrainConfig defaults(TrainMode mode);
};

struct TrainResult {
    NeuralFieldParams<float> params;  // trained weights (base weights in LoRA mode)
    std::optional<LoraAdapter<float>> adapter;
    std::vector<double> history;  // mean batch MSE per epoch
    std::size_t epochs_run = 0;
    /// Epochs completed before the first epoch whose loss met target_mse.
    std::optional<std::size_t> epochs_to_target;
};

/// Fits `target` (row-major over the lattice). Scratch ignores params_in.
/// Throws TrainingDivergedError when the loss exceeds 1e6 or turns non-finite.
TrainResult train(const NeuralFieldParams<float>* params_in, const Snapshot& target,
                  const CoordinateLattice& lattice, const NfArchitecture& arch,
                  const TrainConfig& cfg);

/// lr at epoch e of n: lr_final + (lr_initial - lr_final) (1 + cos(pi e / (n-1))) / 2.
double cosine_lr(const TrainConfig& cfg, std::size_t epoch);

}  // namespace antic::nf
