#pragma once

#include <antic/grid.hpp>
#include <antic/rng.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace testing {

inline antic::Snapshot random_snapshot(antic::Rng& rng, std::size_t rows, std::size_t cols,
                                       antic::Domain d = {}, std::uint64_t t = 0) {
    std::vector<float> v(rows * cols);
    for (float& x : v) x = static_cast<float>(rng.normal());
    return antic::Snapshot({rows, cols}, std::move(v), d, t, static_cast<double>(t));
}

inline antic::Snapshot filled(std::size_t rows, std::size_t cols, float value, std::uint64_t t = 0) {
    return antic::Snapshot({rows, cols}, std::vector<float>(rows * cols, value), {}, t, static_cast<double>(t));
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        antic::Rng rng(std::hash<std::string>{}(tag) ^ reinterpret_cast<std::uintptr_t>(this));
        path_ = std::filesystem::temp_directory_path() / ("antic_" + tag + "_" + std::to_string(rng.next_u64()));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace testing
