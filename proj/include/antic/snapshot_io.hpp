#pragma once

// Snapshot container format (.antc), little-endian:
//   "ANTC" | u16 version=1 | u32 H | u32 W_x | u64 timestep | f64 time
//   | f64 x_min, x_max, y_min, y_max | H*W_x f32 values, row-major
// A file may hold several records back to back.

#include <antic/grid.hpp>

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace antic {

inline constexpr std::uint16_t kSnapshotFormatVersion = 1;

void write_snapshot(std::ostream& out, const Snapshot& s);
/// Reads one record; nullopt on clean end of stream. Throws FormatError.
std::optional<Snapshot> read_snapshot(std::istream& in);

void save_snapshot(const std::filesystem::path& path, const Snapshot& s);
Snapshot load_snapshot(const std::filesystem::path& path);

/// One grid row per CSV line, comma separated.
Snapshot read_snapshot_csv(std::istream& in, Domain domain = {}, std::uint64_t timestep = 0,
                           double time = 0.0);

/// Canonical per-snapshot file name inside a trajectory directory.
std::string snapshot_filename(std::uint64_t timestep);

/// Streams a trajectory from either a directory of *.antc files (sorted by
/// name) or a single file of concatenated records. Files are opened lazily,
/// so only one snapshot is resident at a time.
class FileSource final : public SnapshotSource {
public:
    explicit FileSource(const std::filesystem::path& path);
    std::optional<Snapshot> next() override;
    std::optional<std::size_t> length_hint() const override;

private:
    std::vector<std::filesystem::path> files_;
    std::size_t file_pos_ = 0;
    std::ifstream current_;
    bool single_file_ = false;
};

}  // namespace antic
