#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <Eigen/Core>

#include "elasto/phantom.hpp"
#include "elasto/rf_core.hpp"

namespace testing {

// Small deterministic generator for property tests.
struct Gen {
    std::mt19937_64 rng;
    explicit Gen(std::uint64_t seed) : rng(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng); }
    elasto::Index index(elasto::Index lo, elasto::Index hi) {
        return std::uniform_int_distribution<elasto::Index>(lo, hi)(rng);
    }

    Eigen::MatrixXd matrix(elasto::Index rows, elasto::Index cols, double scale = 1.0) {
        Eigen::MatrixXd m(rows, cols);
        for (elasto::Index j = 0; j < cols; ++j)
            for (elasto::Index i = 0; i < rows; ++i) m(i, j) = scale * normal();
        return m;
    }

    elasto::RfFrame frame(elasto::Index rows, elasto::Index cols) {
        return elasto::RfFrame(matrix(rows, cols).cast<float>(), elasto::FrameMetadata{});
    }

    elasto::DisplacementField field(elasto::Index rows, elasto::Index cols, double scale = 1.0) {
        return {matrix(rows, cols, scale), matrix(rows, cols, scale)};
    }

    // Smooth random image: sum of a few low-frequency cosines.
    Eigen::MatrixXd smooth(elasto::Index rows, elasto::Index cols, int terms = 6) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
        for (int t = 0; t < terms; ++t) {
            const double fr = uniform(0.05, 0.35), fc = uniform(0.05, 0.35), ph = uniform(0.0, 6.28), amp = normal();
            for (elasto::Index j = 0; j < cols; ++j)
                for (elasto::Index i = 0; i < rows; ++i) m(i, j) += amp * std::cos(fr * i + fc * j + ph);
        }
        return m;
    }
};

// Fresh empty directory under the build tree's temp area.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("elasto_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// A small speckle phantom that keeps tests fast.
inline elasto::AcquisitionConfig small_acquisition(elasto::Index samples = 384, elasto::Index lines = 48) {
    elasto::AcquisitionConfig acq;
    acq.samples = samples;
    acq.lines = lines;
    return acq;
}

inline elasto::SceneConfig small_scene(bool inclusion = false) {
    elasto::SceneConfig s;
    s.depth_mm = 12.0;
    s.width_mm = 18.0;
    if (inclusion) s.inclusion = elasto::Inclusion{6.0, 9.0, 2.0, 0.5};
    else s.inclusion.reset();
    return s;
}

}  // namespace testing
