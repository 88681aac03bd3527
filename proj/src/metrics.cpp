#include "elasto/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "elasto/kernels.hpp"

namespace elasto {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Moments {
    double mean = 0.0;
    double variance = 0.0;  // population
};

Moments moments(const Eigen::MatrixXd& img, const Rect& r) {
    const auto block = img.block(r.row0, r.col0, r.rows, r.cols);
    Moments m;
    m.mean = block.mean();
    m.variance = (block.array() - m.mean).square().sum() / static_cast<double>(r.size());
    return m;
}

void check_window(const Eigen::MatrixXd& img, const Rect& r, const char* name) {
    if (!r.within({img.rows(), img.cols()})) {
        throw Error(ErrorCode::InvalidArgument, std::string(name) + " window lies outside the image");
    }
    if (r.size() < kMinWindowSamples) {
        throw Error(ErrorCode::InvalidArgument, std::string(name) + " window has fewer than 16 samples");
    }
}

}  // namespace

bool Rect::within(GridDims dims) const noexcept {
    return row0 >= 0 && col0 >= 0 && rows > 0 && cols > 0 && row0 + rows <= dims.rows && col0 + cols <= dims.cols;
}

bool Rect::overlaps(const Rect& o) const noexcept {
    return row0 < o.row0 + o.rows && o.row0 < row0 + rows && col0 < o.col0 + o.cols && o.col0 < col0 + cols;
}

void RegionSpec::validate(GridDims dims) const {
    if (!target.within(dims) || !background.within(dims)) {
        throw Error(ErrorCode::InvalidArgument, "metric regions must lie within the image");
    }
    if (target.size() < kMinWindowSamples || background.size() < kMinWindowSamples) {
        throw Error(ErrorCode::InvalidArgument, "metric regions need at least 16 samples each");
    }
    if (target.overlaps(background)) throw Error(ErrorCode::InvalidArgument, "target and background overlap");
}

double snr_e(const Eigen::MatrixXd& strain, const Rect& window) {
    check_window(strain, window, "SNR");
    const Moments m = moments(strain, window);
    if (m.variance == 0.0) return kInf;
    return m.mean / std::sqrt(m.variance);
}

double cnr_e(const Eigen::MatrixXd& strain, const RegionSpec& regions) {
    check_window(strain, regions.target, "target");
    check_window(strain, regions.background, "background");
    const Moments t = moments(strain, regions.target);
    const Moments b = moments(strain, regions.background);
    const double diff = b.mean - t.mean;
    const double var = b.variance + t.variance;
    if (var == 0.0) return diff == 0.0 ? 0.0 : kInf;
    return std::sqrt(2.0 * diff * diff / var);
}

double mssim(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const MssimParams& params) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error(ErrorCode::DimensionMismatch, "MSSIM inputs differ in size");
    if (params.window < 1 || params.window > a.rows() || params.window > a.cols()) {
        throw Error(ErrorCode::InvalidArgument, "MSSIM window does not fit the image");
    }
    const double range = params.dynamic_range.value_or(a.maxCoeff() - a.minCoeff());
    kernels::SsimConstants k;
    k.window = params.window;
    k.c1 = (params.k1 * range) * (params.k1 * range);
    k.c2 = (params.k2 * range) * (params.k2 * range);
    const double positions = static_cast<double>((a.rows() - k.window + 1) * (a.cols() - k.window + 1));
    return kernels::ssim_sum(a, b, k) / positions;
}

double psnr(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& corrupted) {
    if (reference.rows() != corrupted.rows() || reference.cols() != corrupted.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "PSNR inputs differ in size");
    }
    if (reference.maxCoeff() == reference.minCoeff()) throw Error(ErrorCode::ConstantFrame, "PSNR reference is constant");
    const double mse = (reference - corrupted).squaredNorm() / static_cast<double>(reference.size());
    if (mse == 0.0) return kInf;
    return 20.0 * std::log10(reference.cwiseAbs().maxCoeff() / std::sqrt(mse));
}

}  // namespace elasto
