#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "elasto/rf_core.hpp"

namespace elasto {

struct Scatterer {
    double axial_mm = 0.0;
    double lateral_mm = 0.0;
    double amplitude = 0.0;
};

struct Inclusion {
    double center_axial_mm = 20.0;
    double center_lateral_mm = 20.0;
    double radius_mm = 5.0;
    double stiffness_ratio = 0.5;  // < 1 soft, > 1 hard
};

struct SceneConfig {
    double depth_mm = 40.0;
    double width_mm = 40.0;
    double density_per_mm2 = 20.0;
    std::optional<Inclusion> inclusion = Inclusion{};
};

/// Minimum scatterer density accepted by generate_scene.
inline constexpr double kMinScattererDensity = 10.0;

struct PhantomScene {
    std::vector<Scatterer> scatterers;
    double depth_mm = 0.0;
    double width_mm = 0.0;
    std::optional<Inclusion> inclusion;
    std::uint64_t seed = 0;
};

/// Uniformly placed scatterers with N(0, 1) amplitudes; deterministic in `seed`.
PhantomScene generate_scene(const SceneConfig& config, std::uint64_t seed);

/// Analytic quasi-static compression. Depth is measured from the probe face
/// (z = 0); compression moves tissue toward the probe, so the background
/// axial displacement is -strain * z. Lateral expansion is taken about
/// `lateral_reference_mm`.
struct DeformationModel {
    double applied_strain = 0.0;  // compression positive, in [0, 0.10]
    double poisson_ratio = 0.49;
    double transition_mm = 0.5;
    double lateral_reference_mm = 20.0;
    std::optional<Inclusion> inclusion;
    // Rigid translation added on top of the strain field.
    double rigid_axial_mm = 0.0;
    double rigid_lateral_mm = 0.0;

    void validate() const;
};

/// Build a model mirroring the scene's inclusion, expanding about its lateral centre.
DeformationModel deformation_for(const PhantomScene& scene, double applied_strain);

struct Displacement {
    double axial_mm = 0.0;
    double lateral_mm = 0.0;
};

/// Weight of the inclusion's local strain at distance `r` from its centre:
/// 1 inside, 0 outside, smoothstep across a band of `transition_mm` centred on the rim.
double inclusion_weight(const Inclusion& inclusion, double transition_mm, double r);

Displacement displacement_at(const DeformationModel& model, double axial_mm, double lateral_mm);

struct AcquisitionConfig {
    double center_frequency = 6.67e6;  // Hz
    double sampling_rate = 40.0e6;     // Hz
    double sound_speed = 1540.0;       // m/s
    Index samples = 1024;
    Index lines = 128;
    double lateral_pitch_mm = 0.3;
    // Depth of sample 0 and lateral position of line 0; unset centres the
    // image in the scene.
    std::optional<double> start_depth_mm;
    std::optional<double> lateral_origin_mm;
    double sigma_axial_mm = 0.1;
    double sigma_lateral_mm = 0.6;
    double psf_truncation = 4.0;  // PSF support in standard deviations

    double axial_spacing_mm() const noexcept { return sound_speed * 1e3 / (2.0 * sampling_rate); }
    FrameMetadata metadata() const noexcept;
    void validate() const;
};

/// Depth of sample 0 for a given scene.
double axial_origin(const AcquisitionConfig& acq, double scene_depth_mm);
/// Lateral position of line 0 for a given scene.
double lateral_origin(const AcquisitionConfig& acq, double scene_width_mm);

/// Sum of amplitude * PSF over all scatterers at every RF sample.
RfFrame render_rf(const PhantomScene& scene, const AcquisitionConfig& acq);

struct DeformedPair {
    RfFrame post;
    DisplacementField truth;  // samples / lines, on the pre-compression grid
};

DeformedPair deform_and_render(const PhantomScene& scene, const DeformationModel& model,
                               const AcquisitionConfig& acq);

/// Ground-truth field alone (what deform_and_render returns as `truth`).
DisplacementField ground_truth_field(const DeformationModel& model, const AcquisitionConfig& acq,
                                     const PhantomScene& scene);

/// Adds white Gaussian noise with RMS max|frame| / 10^(psnr/20). An infinite
/// target returns the frame unchanged. Throws ConstantFrame for a constant frame.
RfFrame add_noise(const RfFrame& frame, double target_psnr_db, std::uint64_t seed);

}  // namespace elasto
