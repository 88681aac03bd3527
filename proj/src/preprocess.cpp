#include "elasto/preprocess.hpp"

#include <cmath>
#include <numbers>

#include "elasto/kernels.hpp"

namespace elasto {

void PreprocessParams::validate() const {
    if (!(fractional_bandwidth > 0.0) || !std::isfinite(fractional_bandwidth)) {
        throw Error(ErrorCode::InvalidArgument, "fractional_bandwidth must be > 0");
    }
    if (!(lateral_sigma_mm >= 0.0) || !std::isfinite(lateral_sigma_mm)) {
        throw Error(ErrorCode::InvalidArgument, "lateral_sigma_mm must be >= 0");
    }
}

namespace {

void unit_norm(std::vector<double>& taps) {
    double energy = 0.0;
    for (double t : taps) energy += t * t;
    const double scale = 1.0 / std::sqrt(energy);
    for (double& t : taps) t *= scale;
}

}  // namespace

std::vector<double> gabor_taps(const FrameMetadata& meta, double fractional_bandwidth) {
    // Gaussian spectrum: FWHM = 2 sqrt(2 ln 2) sigma_f, and sigma_t = 1 / (2 pi sigma_f).
    const double sigma_f = fractional_bandwidth * meta.center_frequency / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
    const double sigma_t = meta.sampling_rate / (2.0 * std::numbers::pi * sigma_f);
    const auto half = static_cast<int>(std::ceil(4.0 * sigma_t));
    const double omega = 2.0 * std::numbers::pi * meta.center_frequency / meta.sampling_rate;
    std::vector<double> taps;
    taps.reserve(static_cast<std::size_t>(2 * half + 1));
    for (int t = -half; t <= half; ++t) {
        taps.push_back(std::cos(omega * t) * std::exp(-0.5 * t * t / (sigma_t * sigma_t)));
    }
    unit_norm(taps);
    return taps;
}

std::vector<double> gaussian_taps(double sigma) {
    if (sigma <= 0.0) return {1.0};
    const auto half = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> taps;
    for (int t = -half; t <= half; ++t) taps.push_back(std::exp(-0.5 * t * t / (sigma * sigma)));
    unit_norm(taps);
    return taps;
}

RfFrame bandpass_filter(const RfFrame& frame, const PreprocessParams& params) {
    params.validate();
    const auto axial = gabor_taps(frame.metadata(), params.fractional_bandwidth);
    const auto lateral = gaussian_taps(params.lateral_sigma_mm / frame.metadata().lateral_spacing);
    Eigen::MatrixXf out;
    kernels::separable_filter(frame.samples(), axial, lateral, out);
    return RfFrame(std::move(out), frame.metadata());
}

std::pair<RfFrame, RfFrame> preprocess_pair(const RfFrame& pre, const RfFrame& post, const PreprocessParams& params) {
    params.validate();
    if (pre.dims() != post.dims()) throw Error(ErrorCode::DimensionMismatch, "pre and post frames differ in size");
    RfFrame a = params.bandpass ? bandpass_filter(pre, params) : pre;
    RfFrame b = params.bandpass ? bandpass_filter(post, params) : post;
    if (!params.normalize) return {std::move(a), std::move(b)};
    const float peak = a.samples().cwiseAbs().maxCoeff();
    if (!(peak > 0.0f)) throw Error(ErrorCode::ConstantFrame, "pre frame is all zeros after filtering");
    return {RfFrame(a.samples() / peak, a.metadata()), RfFrame(b.samples() / peak, b.metadata())};
}

}  // namespace elasto
