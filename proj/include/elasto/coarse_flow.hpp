#pragma once

#include <filesystem>
#include <vector>

#include "elasto/rf_core.hpp"

namespace elasto {

struct Extent {
    Index axial = 0;
    Index lateral = 0;
};

/// Multi-scale block-matching parameters. Level 0 is full resolution; every
/// further level halves the axial axis of the rectified frames.
struct CoarseParams {
    int levels = 3;
    Extent block{64, 8};
    Extent search{16, 4};    // lag range around the propagated estimate on envelope levels
    Extent rf_search{3, 1};  // lag range on the full-resolution RF level when levels > 1
    double min_correlation = 0.5;
    int median_window = 5;

    void validate() const;
};

struct CoarseLevelStats {
    int level = 0;
    Index blocks = 0;
    Index valid = 0;  // peak NCC >= min_correlation
    double mean_peak = 0.0;
};

struct CoarseResult {
    DisplacementField field;
    std::vector<CoarseLevelStats> levels;  // coarsest first
};

CoarseResult estimate_coarse_detailed(const RfFrame& pre, const RfFrame& post, const CoarseParams& params);

inline DisplacementField estimate_coarse(const RfFrame& pre, const RfFrame& post, const CoarseParams& params) {
    return estimate_coarse_detailed(pre, post, params).field;
}

/// Reads an externally computed flow (ELDF or CSV) and resamples it to `rf_dims`.
DisplacementField import_external_flow(const std::filesystem::path& path, GridDims rf_dims);

/// Componentwise 2D median over a window x window neighbourhood, edges replicated.
DisplacementField median_filter_field(const DisplacementField& field, int window);

}  // namespace elasto
