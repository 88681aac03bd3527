#pragma once

#include <filesystem>

#include "elasto/rf_core.hpp"

namespace elasto {

struct StrainParams {
    int window_len = 43;  // axial samples per OLS fit, odd
    // Report compression as positive strain (negated displacement slope).
    bool compression_positive = false;

    void validate() const;
};

/// Sliding-window least-squares derivative of the axial displacement along
/// depth. Displacement and position are both in samples, so the slope is
/// already dimensionless.
StrainImage least_squares_strain(const DisplacementField& field, const StrainParams& params);

/// 8-bit grayscale PNG; strain in [display_min, display_max] maps linearly to 0..255.
void write_strain_png(const StrainImage& strain, const std::filesystem::path& path, double display_min,
                      double display_max);

}  // namespace elasto
