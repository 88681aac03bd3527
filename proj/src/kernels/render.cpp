#include <algorithm>
#include <cmath>
#include <vector>

#include "elasto/kernels.hpp"

namespace elasto::kernels {

namespace {

// One scan line. Scatterers are visited in their (lateral-sorted) order, which
// fixes the summation order per sample regardless of how lines are scheduled.
void render_line(std::span<const Scatterer> scatterers, const RenderGeometry& g, Index j,
                 std::vector<double>& acc, Eigen::MatrixXf& out) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const double x = g.lateral_origin_mm + static_cast<double>(j) * g.lateral_pitch_mm;
    const double half_lat = g.truncation * g.sigma_lateral_mm;
    const double half_ax = g.truncation * g.sigma_axial_mm;
    const double inv_2sl2 = 1.0 / (2.0 * g.sigma_lateral_mm * g.sigma_lateral_mm);
    const double inv_2sa2 = 1.0 / (2.0 * g.sigma_axial_mm * g.sigma_axial_mm);

    const auto first = std::lower_bound(scatterers.begin(), scatterers.end(), x - half_lat,
                                        [](const Scatterer& s, double v) { return s.lateral_mm < v; });
    for (auto it = first; it != scatterers.end() && it->lateral_mm <= x + half_lat; ++it) {
        const double dx = it->lateral_mm - x;
        const double lateral_weight = it->amplitude * std::exp(-dx * dx * inv_2sl2);
        const double lo = (it->axial_mm - half_ax - g.start_depth_mm) / g.axial_spacing_mm;
        const double hi = (it->axial_mm + half_ax - g.start_depth_mm) / g.axial_spacing_mm;
        const Index i_lo = std::max<Index>(0, static_cast<Index>(std::ceil(lo)));
        const Index i_hi = std::min<Index>(g.rows - 1, static_cast<Index>(std::floor(hi)));
        for (Index i = i_lo; i <= i_hi; ++i) {
            const double dz = g.start_depth_mm + static_cast<double>(i) * g.axial_spacing_mm - it->axial_mm;
            acc[static_cast<std::size_t>(i)] +=
                lateral_weight * std::cos(g.wavenumber * dz) * std::exp(-dz * dz * inv_2sa2);
        }
    }
    for (Index i = 0; i < g.rows; ++i) out(i, j) = static_cast<float>(acc[static_cast<std::size_t>(i)]);
}

}  // namespace

void render_lines(std::span<const Scatterer> scatterers, const RenderGeometry& geom, Eigen::MatrixXf& out) {
    out.resize(geom.rows, geom.cols);
#pragma omp parallel
    {
        std::vector<double> acc(static_cast<std::size_t>(geom.rows));
#pragma omp for schedule(dynamic, 4)
        for (Index j = 0; j < geom.cols; ++j) render_line(scatterers, geom, j, acc, out);
    }
}

namespace serial {

void render_lines(std::span<const Scatterer> scatterers, const RenderGeometry& geom, Eigen::MatrixXf& out) {
    out.resize(geom.rows, geom.cols);
    std::vector<double> acc(static_cast<std::size_t>(geom.rows));
    for (Index j = 0; j < geom.cols; ++j) render_line(scatterers, geom, j, acc, out);
}

}  // namespace serial

}  // namespace elasto::kernels
