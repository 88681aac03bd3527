#pragma once

#include <utility>
#include <vector>

#include "elasto/rf_core.hpp"

namespace elasto {

/// RF conditioning applied to both frames before displacement estimation.
struct PreprocessParams {
    bool bandpass = true;
    double fractional_bandwidth = 0.6;  // -6 dB width of the axial pass band over fc
    double lateral_sigma_mm = 0.6;      // 0 disables the lateral smoothing
    bool normalize = true;              // scale the pair so max|pre| = 1

    void validate() const;
};

/// Axial Gabor kernel centred on `center_frequency`, unit L2 norm, cut at 4 sigma.
std::vector<double> gabor_taps(const FrameMetadata& meta, double fractional_bandwidth);

/// Gaussian kernel of `sigma` taps, unit L2 norm, cut at 3 sigma. Sigma 0 gives {1}.
std::vector<double> gaussian_taps(double sigma);

RfFrame bandpass_filter(const RfFrame& frame, const PreprocessParams& params);

/// Filters both frames and applies one common scale factor to the pair.
std::pair<RfFrame, RfFrame> preprocess_pair(const RfFrame& pre, const RfFrame& post, const PreprocessParams& params);

}  // namespace elasto
