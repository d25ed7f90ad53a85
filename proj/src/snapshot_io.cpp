#include <antic/detail/bytes.hpp>
#include <antic/snapshot_io.hpp>

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace antic {

namespace {

constexpr char kMagic[4] = {'A', 'N', 'T', 'C'};
constexpr std::size_t kHeaderBytes = 4 + 2 + 4 + 4 + 8 + 8 + 4 * 8;

}  // namespace

void write_snapshot(std::ostream& out, const Snapshot& s) {
    detail::ByteWriter w;
    w.raw(kMagic, 4);
    w.u16(kSnapshotFormatVersion);
    w.u32(static_cast<std::uint32_t>(s.rows()));
    w.u32(static_cast<std::uint32_t>(s.cols()));
    w.u64(s.timestep());
    w.f64(s.time());
    w.f64(s.domain().x_min);
    w.f64(s.domain().x_max);
    w.f64(s.domain().y_min);
    w.f64(s.domain().y_max);
    w.f32s(s.values());
    const auto& bytes = w.bytes();
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("failed writing snapshot");
}

std::optional<Snapshot> read_snapshot(std::istream& in) {
    std::vector<std::uint8_t> header(kHeaderBytes);
    in.read(reinterpret_cast<char*>(header.data()), static_cast<std::streamsize>(header.size()));
    if (in.gcount() == 0) return std::nullopt;
    if (static_cast<std::size_t>(in.gcount()) != header.size())
        throw FormatError("truncated snapshot header");
    detail::ByteReader r(header);
    char magic[4];
    r.raw(magic, 4);
    if (!std::equal(magic, magic + 4, kMagic)) throw FormatError("bad snapshot magic");
    const auto version = r.u16();
    if (version != kSnapshotFormatVersion)
        throw FormatError("unsupported snapshot version " + std::to_string(version));
    GridShape shape;
    shape.rows = r.u32();
    shape.cols = r.u32();
    const auto timestep = r.u64();
    const double time = r.f64();
    Domain d;
    d.x_min = r.f64();
    d.x_max = r.f64();
    d.y_min = r.f64();
    d.y_max = r.f64();
    if (shape.rows < 2 || shape.cols < 2 || shape.size() > (std::size_t{1} << 32))
        throw FormatError("implausible snapshot shape");
    std::vector<std::uint8_t> body(4 * shape.size());
    in.read(reinterpret_cast<char*>(body.data()), static_cast<std::streamsize>(body.size()));
    if (static_cast<std::size_t>(in.gcount()) != body.size())
        throw FormatError("truncated snapshot values");
    detail::ByteReader br(body);
    std::vector<float> values(shape.size());
    br.f32s(values);
    return Snapshot(shape, std::move(values), d, timestep, time);
}

void save_snapshot(const std::filesystem::path& path, const Snapshot& s) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    write_snapshot(out, s);
}

Snapshot load_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    auto s = read_snapshot(in);
    if (!s) throw FormatError(path.string() + " holds no snapshot");
    return std::move(*s);
}

Snapshot read_snapshot_csv(std::istream& in, Domain domain, std::uint64_t timestep, double time) {
    std::vector<float> values;
    std::size_t rows = 0, cols = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t n = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                values.push_back(std::stof(cell));
            } catch (const std::exception&) {
                throw FormatError("bad CSV cell '" + cell + "' on row " + std::to_string(rows));
            }
            ++n;
        }
        if (rows == 0) cols = n;
        else if (n != cols) throw FormatError("ragged CSV row " + std::to_string(rows));
        ++rows;
    }
    return Snapshot({rows, cols}, std::move(values), domain, timestep, time);
}

std::string snapshot_filename(std::uint64_t timestep) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "snap_%06llu.antc", static_cast<unsigned long long>(timestep));
    return buf;
}

FileSource::FileSource(const std::filesystem::path& path) {
    namespace fs = std::filesystem;
    if (fs::is_directory(path)) {
        for (const auto& e : fs::directory_iterator(path))
            if (e.is_regular_file() && e.path().extension() == ".antc") files_.push_back(e.path());
        std::sort(files_.begin(), files_.end());
        if (files_.empty()) throw FormatError("no .antc files in " + path.string());
    } else if (fs::is_regular_file(path)) {
        files_.push_back(path);
        single_file_ = true;
    } else {
        throw FormatError("trajectory input not found: " + path.string());
    }
}

std::optional<Snapshot> FileSource::next() {
    while (file_pos_ < files_.size()) {
        if (!current_.is_open()) {
            current_.open(files_[file_pos_], std::ios::binary);
            if (!current_) throw FormatError("cannot open " + files_[file_pos_].string());
        }
        if (auto s = read_snapshot(current_)) {
            if (!single_file_) {
                current_.close();
                ++file_pos_;
            }
            return s;
        }
        current_.close();
        ++file_pos_;
    }
    return std::nullopt;
}

std::optional<std::size_t> FileSource::length_hint() const {
    if (single_file_) return std::nullopt;
    return files_.size();
}

}  // namespace antic
