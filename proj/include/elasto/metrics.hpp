#pragma once

#include <optional>

#include <Eigen/Core>

#include "elasto/rf_core.hpp"

namespace elasto {

struct Rect {
    Index row0 = 0;
    Index col0 = 0;
    Index rows = 0;
    Index cols = 0;

    Index size() const noexcept { return rows * cols; }
    bool within(GridDims dims) const noexcept;
    bool overlaps(const Rect& other) const noexcept;
};

struct RegionSpec {
    Rect target;      // inside the inclusion
    Rect background;  // uniform tissue, same depth

    void validate(GridDims dims) const;
};

/// Minimum number of samples in a metric window.
inline constexpr Index kMinWindowSamples = 16;

/// mean / population std over `window`; +inf when the std is zero.
double snr_e(const Eigen::MatrixXd& strain, const Rect& window);
inline double snr_e(const StrainImage& strain, const Rect& window) { return snr_e(strain.values, window); }

/// sqrt(2 (mean_b - mean_t)^2 / (var_b + var_t)); +inf when both variances vanish.
double cnr_e(const Eigen::MatrixXd& strain, const RegionSpec& regions);
inline double cnr_e(const StrainImage& strain, const RegionSpec& regions) { return cnr_e(strain.values, regions); }

struct MssimParams {
    Index window = 8;
    double k1 = 0.01;
    double k2 = 0.03;
    std::optional<double> dynamic_range;  // defaults to max - min of the first image
};

/// Mean SSIM over all window positions with uniform weighting.
double mssim(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const MssimParams& params = {});

/// 20 log10(max|reference| / RMS(reference - corrupted)); +inf for identical inputs.
double psnr(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& corrupted);

}  // namespace elasto
