#pragma once

#include "bovi/types.hpp"

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

namespace test {

/// Mask from ASCII art: '#' = white, anything else = black.
inline bovi::MaskGrid mask_from(const std::vector<std::string>& rows) {
    bovi::MaskGrid m(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index y = 0; y < m.rows(); ++y)
        for (Eigen::Index x = 0; x < m.cols(); ++x)
            m(y, x) = rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] == '#'
                          ? bovi::kMaskOn
                          : bovi::kMaskOff;
    return m;
}

inline bool same_mask(const bovi::MaskGrid& a, const bovi::MaskGrid& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a == b).all();
}

inline long white_count(const bovi::MaskGrid& m) {
    return (m != bovi::kMaskOff).count();
}

/// Unique scratch directory, removed on destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("bovi_" + tag + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

inline bovi::HueGrid random_hue(int rows, int cols, std::mt19937& rng) {
    std::uniform_int_distribution<int> pick(0, bovi::kHueMax);
    bovi::HueGrid h(rows, cols);
    for (Eigen::Index y = 0; y < h.rows(); ++y)
        for (Eigen::Index x = 0; x < h.cols(); ++x)
            h(y, x) = static_cast<std::uint8_t>(pick(rng));
    return h;
}

} // namespace test
