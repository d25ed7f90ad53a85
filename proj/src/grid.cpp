#include <antic/grid.hpp>
#include <antic/kernels/kernels.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace antic {

Snapshot::Snapshot(GridShape shape, std::vector<float> values, Domain domain,
                   std::uint64_t timestep, double time)
    : shape_(shape), values_(std::move(values)), domain_(domain), timestep_(timestep), time_(time) {
    if (shape_.rows < 2 || shape_.cols < 2)
        throw InvalidShapeError("snapshot needs at least 2x2 points, got " +
                                std::to_string(shape_.rows) + "x" + std::to_string(shape_.cols));
    if (values_.size() != shape_.size())
        throw ShapeMismatchError("snapshot value count " + std::to_string(values_.size()) +
                                 " does not match shape " + std::to_string(shape_.rows) + "x" +
                                 std::to_string(shape_.cols));
    if (!(domain_.x_max > domain_.x_min) || !(domain_.y_max > domain_.y_min))
        throw InvalidShapeError("domain extents must be strictly increasing");
    for (float v : values_)
        if (!std::isfinite(v)) throw NumericInstabilityError("snapshot holds non-finite value", 0);
}

Snapshot Snapshot::with_time(std::uint64_t timestep, double time) const {
    return Snapshot(shape_, values_, domain_, timestep, time);
}

CoordinateLattice make_lattice(GridShape shape) {
    if (shape.rows < 2 || shape.cols < 2)
        throw InvalidShapeError("lattice needs at least 2 points per axis");
    CoordinateLattice lat;
    lat.shape_ = shape;
    lat.points_.resize(2 * shape.size());
    const double sx = 2.0 / static_cast<double>(shape.cols - 1);
    const double sy = 2.0 / static_cast<double>(shape.rows - 1);
    std::size_t k = 0;
    for (std::size_t i = 0; i < shape.rows; ++i) {
        const float y = i + 1 == shape.rows ? 1.0f : static_cast<float>(-1.0 + sy * static_cast<double>(i));
        for (std::size_t j = 0; j < shape.cols; ++j) {
            const float x = j + 1 == shape.cols ? 1.0f : static_cast<float>(-1.0 + sx * static_cast<double>(j));
            lat.points_[k++] = x;
            lat.points_[k++] = y;
        }
    }
    return lat;
}

double pearson(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size() || a.empty())
        throw ShapeMismatchError("pearson inputs differ in size");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) throw DegenerateInputError("pearson of a constant field");
    const double r = sab / std::sqrt(saa * sbb);
    return std::clamp(r, -1.0, 1.0);
}

double pearson(const Snapshot& a, const Snapshot& b) {
    if (a.shape() != b.shape()) throw ShapeMismatchError("pearson inputs differ in shape");
    return pearson(a.values(), b.values());
}

double rel_l2(std::span<const float> recon, std::span<const float> truth) {
    if (recon.size() != truth.size()) throw ShapeMismatchError("rel_l2 inputs differ in size");
    double num = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = static_cast<double>(recon[i]) - truth[i];
        num += d * d;
    }
    const double den = kernels::sum_sq(truth);
    if (den == 0.0) return num == 0.0 ? 0.0 : std::sqrt(num);
    return std::sqrt(num / den);
}

double mean_abs_error(std::span<const float> recon, std::span<const float> truth) {
    if (recon.size() != truth.size()) throw ShapeMismatchError("mae inputs differ in size");
    double s = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        s += std::abs(static_cast<double>(recon[i]) - truth[i]);
    return truth.empty() ? 0.0 : s / static_cast<double>(truth.size());
}

std::optional<Snapshot> VectorSource::next() {
    if (pos_ >= items_.size()) return std::nullopt;
    return items_[pos_++];
}

std::optional<Snapshot> CheckedTrajectory::next() {
    auto s = inner_.next();
    if (!s) return s;
    if (!last_timestep_) {
        if (s->timestep() != 0) throw FormatError("trajectory must start at timestep 0");
        shape_ = s->shape();
        domain_ = s->domain();
    } else {
        if (s->timestep() <= *last_timestep_)
            throw FormatError("trajectory timesteps must strictly increase (got " +
                              std::to_string(s->timestep()) + " after " +
                              std::to_string(*last_timestep_) + ")");
        if (s->shape() != *shape_) throw ShapeMismatchError("trajectory changes grid shape");
        if (s->domain() != *domain_) throw ShapeMismatchError("trajectory changes domain");
    }
    last_timestep_ = s->timestep();
    ++pulled_;
    return s;
}

std::vector<Snapshot> collect(SnapshotSource& source) {
    std::vector<Snapshot> out;
    while (auto s = source.next()) out.push_back(std::move(*s));
    return out;
}

}  // namespace antic
