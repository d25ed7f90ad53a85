#pragma once

// Weight-update records (.antw), little-endian:
//
//   "ANTW" | u16 version=1 | u8 kind | u64 timestep
//   | u32 hidden_dim, n_layers, ffm_dim, in_dim, out_dim | f64 ffm_frequency
//   | u32 rank (0 unless LoRA) | f32 payload
//
// Payload order. BaseFull and FullDelta: ffm, then per hidden layer
// ln_scale, ln_shift, weight (row-major), bias, then head weight, head bias.
// FullDelta holds W_t - W_prev in the same layout (the ffm slot is zero).
// LoraPair: A then B for every hidden layer, then the head.

#include <antic/grid.hpp>
#include <antic/nefield.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace antic {

inline constexpr std::uint16_t kUpdateFormatVersion = 1;

enum class UpdateKind : std::uint8_t { BaseFull = 0, FullDelta = 1, LoraPair = 2 };

std::string_view to_string(UpdateKind kind) noexcept;

/// Decoded form of one update.
struct UpdateRecord {
    UpdateKind kind = UpdateKind::BaseFull;
    std::uint64_t timestep = 0;
    nf::NeuralFieldParams<float> weights;  // BaseFull: weights; FullDelta: the delta
    nf::LoraAdapter<float> adapter;        // LoraPair only

    nf::NfArchitecture arch() const { return weights.arch; }
    std::size_t param_count() const;
};

/// Encoded form; `payload` is the complete byte stream written to disk.
struct CompressedUpdate {
    UpdateKind kind = UpdateKind::BaseFull;
    std::uint64_t timestep = 0;
    std::vector<std::uint8_t> payload;
    std::size_t param_count = 0;

    std::size_t stored_bytes() const noexcept { return payload.size(); }
};

UpdateRecord make_base(const nf::NeuralFieldParams<float>& weights, std::uint64_t timestep);
/// cur - prev, element-wise in float.
UpdateRecord make_delta(const nf::NeuralFieldParams<float>& prev,
                        const nf::NeuralFieldParams<float>& cur, std::uint64_t timestep);
/// An adapter record carries the architecture in `weights.arch` only.
UpdateRecord make_lora(const nf::NfArchitecture& arch, const nf::LoraAdapter<float>& adapter,
                       std::uint64_t timestep);

/// prev + delta in float; applying make_delta(prev, cur) to prev yields the
/// canonical form of cur that replay reproduces bit for bit.
nf::NeuralFieldParams<float> apply_delta(const nf::NeuralFieldParams<float>& prev,
                                         const nf::NeuralFieldParams<float>& delta);

/// Weights after applying `rec` to the current chain state (ignored for BaseFull).
nf::NeuralFieldParams<float> apply_update(const nf::NeuralFieldParams<float>* current,
                                          const UpdateRecord& rec);

/// Throws FormatError on a non-finite value.
CompressedUpdate serialize_update(const UpdateRecord& rec);
/// Throws FormatError on malformed input.
UpdateRecord deserialize_update(std::span<const std::uint8_t> bytes);

void save_update(const std::filesystem::path& path, const CompressedUpdate& u);
UpdateRecord load_update(const std::filesystem::path& path);
std::string update_filename(std::uint64_t timestep);

struct CompressionReport {
    std::uint64_t raw_bytes_per_snapshot = 0;
    std::size_t total_snapshots = 0;  // T
    std::size_t retained = 0;
    std::uint64_t stored_total = 0;
    std::uint64_t delta_total = 0;  // stored bytes excluding BaseFull records
    double stored_per_snapshot = 0.0;
    double sc = 0.0;            // raw / mean stored
    double tr = 0.0;            // retained / T
    double tc = 0.0;            // raw * T / stored_total
    double tc_amortized = 0.0;  // raw * T / delta_total (base stored once, not counted)
};

/// Throws ConfigError when nothing is stored or retained > T.
CompressionReport compression_report(std::uint64_t raw_snapshot_bytes,
                                     std::span<const CompressedUpdate> updates,
                                     std::size_t total_snapshots, std::size_t retained);
/// Same from bare sizes. BaseFull records are left out of the amortized total.
CompressionReport compression_report(std::uint64_t raw_snapshot_bytes,
                                     std::span<const std::uint64_t> stored_bytes,
                                     std::span<const UpdateKind> kinds, std::size_t total_snapshots,
                                     std::size_t retained);

std::uint64_t raw_snapshot_bytes(const Snapshot& s) noexcept;

struct QuantizedField {
    std::vector<std::uint8_t> bytes;  // deflate stream
    double rel_l2 = 0.0;
    std::size_t raw_bytes = 0;
    double ratio() const noexcept {
        return static_cast<double>(raw_bytes) / static_cast<double>(bytes.size());
    }
};

/// Keeps `mantissa_bits` of the 23-bit float mantissa, byte-shuffles and
/// deflates. Throws ConfigError outside 1..23.
QuantizedField baseline_quantize_deflate(const Snapshot& s, int mantissa_bits);
std::vector<float> baseline_inflate(std::span<const std::uint8_t> bytes, std::size_t count);

}  // namespace antic
