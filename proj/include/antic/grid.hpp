#pragma once

#include <antic/error.hpp>

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace antic {

struct GridShape {
    std::size_t rows = 0;  // H
    std::size_t cols = 0;  // W_x

    std::size_t size() const noexcept { return rows * cols; }
    friend bool operator==(const GridShape&, const GridShape&) = default;
};

/// Physical extents [x_min, x_max] x [y_min, y_max]. Samples are cell centred:
/// sample (i, j) sits at x_min + (j + 1/2) dx, y_min + (i + 1/2) dy.
struct Domain {
    double x_min = 0.0;
    double x_max = 1.0;
    double y_min = 0.0;
    double y_max = 1.0;

    double width() const noexcept { return x_max - x_min; }
    double height() const noexcept { return y_max - y_min; }
    friend bool operator==(const Domain&, const Domain&) = default;
};

/// One timestep of a 2D scalar field, row-major H x W_x float32 values.
/// Immutable after construction; the constructor enforces the invariants
/// (both dimensions >= 2, finite values, increasing extents).
class Snapshot {
public:
    Snapshot(GridShape shape, std::vector<float> values, Domain domain = {},
             std::uint64_t timestep = 0, double time = 0.0);

    GridShape shape() const noexcept { return shape_; }
    std::size_t rows() const noexcept { return shape_.rows; }
    std::size_t cols() const noexcept { return shape_.cols; }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<const float> values() const noexcept { return values_; }
    float at(std::size_t i, std::size_t j) const { return values_[i * shape_.cols + j]; }
    const Domain& domain() const noexcept { return domain_; }
    std::uint64_t timestep() const noexcept { return timestep_; }
    double time() const noexcept { return time_; }

    double dx() const noexcept { return domain_.width() / static_cast<double>(shape_.cols); }
    double dy() const noexcept { return domain_.height() / static_cast<double>(shape_.rows); }

    /// Copy with new metadata and the same values.
    Snapshot with_time(std::uint64_t timestep, double time) const;

private:
    GridShape shape_;
    std::vector<float> values_;
    Domain domain_;
    std::uint64_t timestep_;
    double time_;
};

/// Normalized input coordinates for the neural field, row-major, one (x, y)
/// pair per grid point. Corners map exactly to +-1.
class CoordinateLattice {
public:
    GridShape source_shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return points_.size() / 2; }
    /// Interleaved x0, y0, x1, y1, ...
    std::span<const float> points() const noexcept { return points_; }
    std::array<float, 2> point(std::size_t k) const { return {points_[2 * k], points_[2 * k + 1]}; }

private:
    friend CoordinateLattice make_lattice(GridShape shape);
    GridShape shape_;
    std::vector<float> points_;
};

/// x = -1 + 2j/(W_x-1), y = -1 + 2i/(H-1). Throws InvalidShapeError for any
/// dimension below 2.
CoordinateLattice make_lattice(GridShape shape);

/// Sample Pearson correlation of the flattened fields, accumulated in double.
/// Throws ShapeMismatchError / DegenerateInputError (zero variance).
double pearson(const Snapshot& a, const Snapshot& b);
double pearson(std::span<const float> a, std::span<const float> b);

/// Relative l2 error ||recon - truth|| / ||truth||.
double rel_l2(std::span<const float> recon, std::span<const float> truth);
double mean_abs_error(std::span<const float> recon, std::span<const float> truth);

/// Pull-based trajectory stream. Single consumer.
class SnapshotSource {
public:
    virtual ~SnapshotSource() = default;
    /// Next snapshot, or nullopt once the stream is exhausted.
    virtual std::optional<Snapshot> next() = 0;
    virtual std::optional<std::size_t> length_hint() const { return std::nullopt; }
};

/// Source over an in-memory sequence (tests, small tools).
class VectorSource final : public SnapshotSource {
public:
    explicit VectorSource(std::vector<Snapshot> snapshots) : items_(std::move(snapshots)) {}
    std::optional<Snapshot> next() override;
    std::optional<std::size_t> length_hint() const override { return items_.size(); }

private:
    std::vector<Snapshot> items_;
    std::size_t pos_ = 0;
};

/// Wraps a source and enforces the trajectory invariants: timesteps strictly
/// increasing from 0, one shape and domain throughout. Also counts pulls.
class CheckedTrajectory final : public SnapshotSource {
public:
    explicit CheckedTrajectory(SnapshotSource& inner) : inner_(inner) {}
    std::optional<Snapshot> next() override;
    std::optional<std::size_t> length_hint() const override { return inner_.length_hint(); }
    std::size_t pulled() const noexcept { return pulled_; }

private:
    SnapshotSource& inner_;
    std::size_t pulled_ = 0;
    std::optional<std::uint64_t> last_timestep_;
    std::optional<GridShape> shape_;
    std::optional<Domain> domain_;
};

/// Drains a source into memory. Only for tests and small offline tools.
std::vector<Snapshot> collect(SnapshotSource& source);

}  // namespace antic
