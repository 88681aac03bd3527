#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "elasto/coarse_flow.hpp"
#include "elasto/glue.hpp"
#include "elasto/metrics.hpp"
#include "elasto/phantom.hpp"
#include "elasto/preprocess.hpp"
#include "elasto/strain.hpp"

namespace elasto {

struct PhantomSection {
    SceneConfig scene;
    double applied_strain = 0.02;
    double poisson_ratio = 0.49;
    double transition_mm = 0.5;
    AcquisitionConfig acquisition;
    double psnr_db = std::numeric_limits<double>::infinity();  // +inf: no noise
    std::uint64_t scene_seed = 1;
    std::uint64_t noise_seed = 2;
};

struct StrainSection {
    // Long window: the 43-sample fit is too noisy for the default 12.7 dB phantom.
    StrainParams params{251, true};
    // PNG grey-level range; unset uses the 1st and 99th percentile of the image.
    std::optional<double> display_min;
    std::optional<double> display_max;
};

struct MetricsSection {
    // Pixel rectangles; unset derives them from the phantom inclusion.
    std::optional<Rect> target;
    std::optional<Rect> background;
    std::vector<double> sweep;  // applied strains; empty runs phantom.applied_strain only
    double success_cnr = 2.0;
    MssimParams mssim;
};

struct PipelineConfig {
    PhantomSection phantom;
    PreprocessParams preprocess;
    CoarseParams coarse;
    std::optional<std::filesystem::path> external_flow;
    // Weaker lateral smoothing of the axial field than the library default.
    GlueParams glue{5.0, 0.3, 10.0, 0.5};
    StrainSection strain;
    MetricsSection metrics;
    std::filesystem::path output = "out";

    /// Cross-field checks; throws Error(Config).
    void validate() const;
};

/// Parses YAML text. `source` names the origin in diagnostics. Each override is
/// "section.key=value" with a YAML value and is applied before parsing, so it
/// is checked exactly like a key in the file. Unknown keys, wrong types and
/// out-of-range values throw Error(Config) naming the key and its location.
PipelineConfig parse_config(const std::string& text, const std::string& source,
                            const std::vector<std::string>& overrides = {});

PipelineConfig load_config(const std::optional<std::filesystem::path>& path,
                           const std::vector<std::string>& overrides = {});

/// Writes every setting as YAML that parse_config reads back to the same values.
void write_config(const PipelineConfig& config, std::ostream& out);
std::string config_text(const PipelineConfig& config);

/// Independent stream seed derived from a base seed (splitmix64).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept;

}  // namespace elasto
