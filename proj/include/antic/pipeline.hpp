#pragma once

// End-to-end streaming compression: select snapshots on the fly, fit each
// selected one (cold start for index 0, then fine-tuned from the running
// weights), persist one update record per fitted snapshot, and evaluate.
//
// Output directory layout:
//   update_XXXXXX.antw   one record per chain entry, XXXXXX = stream index
//   manifest.json        grid, architecture and the ordered chain
//   report.json          selection, per-snapshot fidelity, accounting
//   report.csv           one row per retained snapshot

#include <antic/codec.hpp>
#include <antic/nefield.hpp>
#include <antic/selector.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace antic {

struct PipelineConfig {
    SelectorConfig selector;
    nf::NfArchitecture arch;
    nf::TrainConfig base_train = nf::TrainConfig::defaults(nf::TrainMode::Scratch);  // index 0
    nf::TrainConfig train = nf::TrainConfig::defaults(nf::TrainMode::FullFT);
    std::filesystem::path out_dir;  // empty: keep everything in memory
    bool evaluate = true;
    bool record_timing = false;  // wall-clock columns in the written reports

    void validate() const;
};

struct SnapshotRow {
    std::size_t index = 0;
    std::uint64_t timestep = 0;
    double time = 0.0;
    UpdateKind kind = UpdateKind::BaseFull;
    std::size_t stored_bytes = 0;
    std::size_t param_count = 0;
    double rel_l2 = 0.0;
    double mae = 0.0;
    double final_mse = 0.0;
    std::size_t epochs = 0;
    std::optional<std::size_t> epochs_to_target;
    double seconds = 0.0;
    bool failed = false;
    std::string error;
};

struct PipelineReport {
    SelectionResult selection;
    std::vector<SnapshotRow> rows;  // one per retained index, in order
    std::vector<CompressedUpdate> updates;  // one per successful row
    CompressionReport compression;
    nf::TrainMode mode = nf::TrainMode::FullFT;
    std::size_t rank = 0;
    std::size_t snapshots_pulled = 0;
    std::size_t snapshots_trained = 0;
    std::size_t failures = 0;
    double mean_rel_l2 = 0.0;
    double mean_mae = 0.0;

    std::string to_json(bool with_timing) const;
    std::string to_csv(bool with_timing) const;
};

/// Throws when the stream is empty, the stream itself fails, or the base
/// snapshot cannot be fitted. Later fitting failures are flagged in the report.
PipelineReport run(SnapshotSource& trajectory, const PipelineConfig& cfg);

/// Replays the chain in `dir` and reconstructs each requested stream index
/// (all chain entries when empty). Throws ChainGapError naming the first
/// missing record, IndexError for an index that is not in the chain.
std::vector<Snapshot> reconstruct_trajectory(const std::filesystem::path& dir,
                                             std::span<const std::size_t> indices = {});

/// Replays records applied in order.
class ChainReplayer {
public:
    void apply(const UpdateRecord& rec);
    const nf::NeuralFieldParams<float>& weights() const;
    bool empty() const noexcept { return !current_; }

private:
    std::optional<nf::NeuralFieldParams<float>> current_;
};

}  // namespace antic
