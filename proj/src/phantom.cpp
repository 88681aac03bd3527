#include "elasto/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "elasto/kernels.hpp"

namespace elasto {

namespace {

void validate_inclusion(const Inclusion& inc) {
    if (!(inc.stiffness_ratio > 0.0) || !std::isfinite(inc.stiffness_ratio)) {
        throw Error(ErrorCode::InvalidArgument, "inclusion stiffness_ratio must be > 0");
    }
    if (!(inc.radius_mm > 0.0)) throw Error(ErrorCode::InvalidArgument, "inclusion radius must be > 0");
}

// Integral of the inclusion weight along a straight line at perpendicular
// distance `offset` from the inclusion centre, for line coordinate s in
// [s0, s1] (s = 0 at the foot of the perpendicular). Signed: s1 < s0 negates.
double weight_integral(const Inclusion& inc, double band, double offset, double s0, double s1) {
    if (s0 == s1) return 0.0;
    const double sign = s1 >= s0 ? 1.0 : -1.0;
    const double lo = std::min(s0, s1);
    const double hi = std::max(s0, s1);

    const double outer = inc.radius_mm + 0.5 * band;
    const double inner = inc.radius_mm - 0.5 * band;
    if (std::abs(offset) >= outer) return 0.0;
    const double outer_half = std::sqrt(outer * outer - offset * offset);
    const double inner_half = std::abs(offset) < inner ? std::sqrt(inner * inner - offset * offset) : 0.0;

    const auto overlap = [&](double a, double b) { return std::pair{std::max(a, lo), std::min(b, hi)}; };
    double total = 0.0;

    if (inner_half > 0.0) {
        const auto [a, b] = overlap(-inner_half, inner_half);
        if (b > a) total += b - a;
    }
    if (band > 0.0) {
        const auto w = [&](double s) { return inclusion_weight(inc, band, std::hypot(offset, s)); };
        for (const auto& [ea, eb] : {std::pair{-outer_half, -inner_half}, std::pair{inner_half, outer_half}}) {
            const auto [a, b] = overlap(ea, eb);
            if (b > a) total += boost::math::quadrature::gauss<double, 20>::integrate(w, a, b);
        }
    }
    return sign * total;
}

}  // namespace

PhantomScene generate_scene(const SceneConfig& config, std::uint64_t seed) {
    if (!(config.depth_mm > 0.0) || !(config.width_mm > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "scene extent must be positive");
    }
    if (!(config.density_per_mm2 >= kMinScattererDensity)) {
        throw Error(ErrorCode::DensityTooLow, "scatterer density " + std::to_string(config.density_per_mm2) +
                                                  " per mm^2 is below the minimum of 10");
    }
    if (config.inclusion) validate_inclusion(*config.inclusion);

    const auto count = static_cast<std::size_t>(std::llround(config.density_per_mm2 * config.depth_mm * config.width_mm));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> depth(0.0, config.depth_mm);
    std::uniform_real_distribution<double> width(0.0, config.width_mm);
    std::normal_distribution<double> amplitude(0.0, 1.0);

    PhantomScene scene;
    scene.depth_mm = config.depth_mm;
    scene.width_mm = config.width_mm;
    scene.inclusion = config.inclusion;
    scene.seed = seed;
    scene.scatterers.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        Scatterer s;
        s.axial_mm = depth(rng);
        s.lateral_mm = width(rng);
        s.amplitude = amplitude(rng);
        scene.scatterers.push_back(s);
    }
    return scene;
}

void DeformationModel::validate() const {
    if (!(applied_strain >= 0.0 && applied_strain <= 0.10)) {
        throw Error(ErrorCode::InvalidArgument, "applied strain must lie in [0, 0.10]");
    }
    if (!(poisson_ratio >= 0.0 && poisson_ratio <= 0.5)) {
        throw Error(ErrorCode::InvalidArgument, "poisson ratio must lie in [0, 0.5]");
    }
    if (!(transition_mm >= 0.0)) throw Error(ErrorCode::InvalidArgument, "transition band must be >= 0");
    if (inclusion) validate_inclusion(*inclusion);
}

DeformationModel deformation_for(const PhantomScene& scene, double applied_strain) {
    DeformationModel model;
    model.applied_strain = applied_strain;
    model.inclusion = scene.inclusion;
    model.lateral_reference_mm = scene.inclusion ? scene.inclusion->center_lateral_mm : 0.5 * scene.width_mm;
    return model;
}

double inclusion_weight(const Inclusion& inclusion, double transition_mm, double r) {
    if (transition_mm <= 0.0) return r <= inclusion.radius_mm ? 1.0 : 0.0;
    const double t = std::clamp((inclusion.radius_mm + 0.5 * transition_mm - r) / transition_mm, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

Displacement displacement_at(const DeformationModel& model, double axial_mm, double lateral_mm) {
    const double eps = model.applied_strain;
    Displacement d;
    d.axial_mm = model.rigid_axial_mm - eps * axial_mm;
    d.lateral_mm = model.rigid_lateral_mm + model.poisson_ratio * eps * (lateral_mm - model.lateral_reference_mm);
    if (model.inclusion && eps != 0.0) {
        const Inclusion& inc = *model.inclusion;
        // Local strain is eps * (1 + w * (1/ratio - 1)); integrate the excess.
        const double excess = eps * (1.0 / inc.stiffness_ratio - 1.0);
        // Referenced to the inclusion centre so the extra displacement splits
        // evenly above and below it instead of shearing one long column.
        const double along_depth = weight_integral(inc, model.transition_mm, lateral_mm - inc.center_lateral_mm,
                                                   0.0, axial_mm - inc.center_axial_mm);
        const double along_width =
            weight_integral(inc, model.transition_mm, axial_mm - inc.center_axial_mm,
                            model.lateral_reference_mm - inc.center_lateral_mm, lateral_mm - inc.center_lateral_mm);
        d.axial_mm -= excess * along_depth;
        d.lateral_mm += model.poisson_ratio * excess * along_width;
    }
    return d;
}

FrameMetadata AcquisitionConfig::metadata() const noexcept {
    FrameMetadata meta;
    meta.sampling_rate = sampling_rate;
    meta.center_frequency = center_frequency;
    meta.axial_spacing = axial_spacing_mm();
    meta.lateral_spacing = lateral_pitch_mm;
    return meta;
}

void AcquisitionConfig::validate() const {
    if (samples < 2 || lines < 2) throw Error(ErrorCode::InvalidArgument, "acquisition needs >= 2 samples and lines");
    if (!(center_frequency > 0.0) || !(sampling_rate > 2.0 * center_frequency)) {
        throw Error(ErrorCode::InvalidArgument, "sampling rate must exceed twice the centre frequency");
    }
    if (!(sound_speed > 0.0) || !(lateral_pitch_mm > 0.0) || !(sigma_axial_mm > 0.0) || !(sigma_lateral_mm > 0.0) ||
        !(psf_truncation > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "acquisition lengths must be positive");
    }
}

double axial_origin(const AcquisitionConfig& acq, double scene_depth_mm) {
    if (acq.start_depth_mm) return *acq.start_depth_mm;
    return 0.5 * (scene_depth_mm - static_cast<double>(acq.samples - 1) * acq.axial_spacing_mm());
}

double lateral_origin(const AcquisitionConfig& acq, double scene_width_mm) {
    if (acq.lateral_origin_mm) return *acq.lateral_origin_mm;
    return 0.5 * (scene_width_mm - static_cast<double>(acq.lines - 1) * acq.lateral_pitch_mm);
}

namespace {

RfFrame render_sorted(std::vector<Scatterer> scatterers, const AcquisitionConfig& acq, const PhantomScene& scene) {
    acq.validate();
    std::stable_sort(scatterers.begin(), scatterers.end(),
                     [](const Scatterer& a, const Scatterer& b) { return a.lateral_mm < b.lateral_mm; });
    kernels::RenderGeometry geom;
    geom.rows = acq.samples;
    geom.cols = acq.lines;
    geom.start_depth_mm = axial_origin(acq, scene.depth_mm);
    geom.axial_spacing_mm = acq.axial_spacing_mm();
    geom.lateral_origin_mm = lateral_origin(acq, scene.width_mm);
    geom.lateral_pitch_mm = acq.lateral_pitch_mm;
    // cos(2 pi fc tau) with round-trip delay tau = 2 dz / c.
    geom.wavenumber = 4.0 * std::numbers::pi * acq.center_frequency / (acq.sound_speed * 1e3);
    geom.sigma_axial_mm = acq.sigma_axial_mm;
    geom.sigma_lateral_mm = acq.sigma_lateral_mm;
    geom.truncation = acq.psf_truncation;

    Eigen::MatrixXf samples;
    kernels::render_lines(scatterers, geom, samples);
    return RfFrame(std::move(samples), acq.metadata());
}

}  // namespace

RfFrame render_rf(const PhantomScene& scene, const AcquisitionConfig& acq) {
    return render_sorted(scene.scatterers, acq, scene);
}

DisplacementField ground_truth_field(const DeformationModel& model, const AcquisitionConfig& acq,
                                     const PhantomScene& scene) {
    model.validate();
    acq.validate();
    const double dz = acq.axial_spacing_mm();
    const double z0 = axial_origin(acq, scene.depth_mm);
    const double x0 = lateral_origin(acq, scene.width_mm);
    DisplacementField truth = DisplacementField::zeros({acq.samples, acq.lines});
    for (Index j = 0; j < acq.lines; ++j) {
        const double x = x0 + static_cast<double>(j) * acq.lateral_pitch_mm;
        for (Index i = 0; i < acq.samples; ++i) {
            const double z = z0 + static_cast<double>(i) * dz;
            const Displacement d = displacement_at(model, z, x);
            truth.axial(i, j) = d.axial_mm / dz;
            truth.lateral(i, j) = d.lateral_mm / acq.lateral_pitch_mm;
        }
    }
    return truth;
}

DeformedPair deform_and_render(const PhantomScene& scene, const DeformationModel& model,
                               const AcquisitionConfig& acq) {
    model.validate();
    std::vector<Scatterer> moved = scene.scatterers;
    for (Scatterer& s : moved) {
        const Displacement d = displacement_at(model, s.axial_mm, s.lateral_mm);
        s.axial_mm += d.axial_mm;
        s.lateral_mm += d.lateral_mm;
    }
    return {render_sorted(std::move(moved), acq, scene), ground_truth_field(model, acq, scene)};
}

RfFrame add_noise(const RfFrame& frame, double target_psnr_db, std::uint64_t seed) {
    if (std::isinf(target_psnr_db) && target_psnr_db > 0.0) return frame;
    if (!std::isfinite(target_psnr_db)) throw Error(ErrorCode::InvalidArgument, "PSNR target must be finite or +inf");
    const auto& s = frame.samples();
    if (s.maxCoeff() == s.minCoeff()) {
        throw Error(ErrorCode::ConstantFrame, "cannot set a PSNR relative to a constant frame");
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd noise(s.rows(), s.cols());
    for (Index j = 0; j < s.cols(); ++j) {
        for (Index i = 0; i < s.rows(); ++i) noise(i, j) = normal(rng);
    }
    const double noise_rms = std::sqrt(noise.squaredNorm() / static_cast<double>(noise.size()));
    const double peak = s.cast<double>().cwiseAbs().maxCoeff();
    const double target_rms = peak / std::pow(10.0, target_psnr_db / 20.0);
    Eigen::MatrixXf noisy = (s.cast<double>() + noise * (target_rms / noise_rms)).cast<float>();
    return RfFrame(std::move(noisy), frame.metadata());
}

}  // namespace elasto
