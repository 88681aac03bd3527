#include <vector>

#include "elasto/kernels.hpp"

namespace elasto::kernels {

namespace {

double window_ssim(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const SsimConstants& k, Index r0, Index c0) {
    const auto x = a.block(r0, c0, k.window, k.window);
    const auto y = b.block(r0, c0, k.window, k.window);
    const double count = static_cast<double>(k.window * k.window);
    const double mx = x.sum() / count;
    const double my = y.sum() / count;
    double vx = 0.0;
    double vy = 0.0;
    double cxy = 0.0;
    for (Index c = 0; c < k.window; ++c) {
        for (Index r = 0; r < k.window; ++r) {
            const double dx = x(r, c) - mx;
            const double dy = y(r, c) - my;
            vx += dx * dx;
            vy += dy * dy;
            cxy += dx * dy;
        }
    }
    vx /= count;
    vy /= count;
    cxy /= count;
    const double num = (2.0 * mx * my + k.c1) * (2.0 * cxy + k.c2);
    const double den = (mx * mx + my * my + k.c1) * (vx + vy + k.c2);
    // Both windows constant and equal with zero stabilisers: identical content.
    if (den == 0.0) return num == 0.0 ? 1.0 : 0.0;
    return num / den;
}

double column_sum(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const SsimConstants& k, Index c0) {
    double s = 0.0;
    for (Index r0 = 0; r0 + k.window <= a.rows(); ++r0) s += window_ssim(a, b, k, r0, c0);
    return s;
}

}  // namespace

double ssim_sum(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const SsimConstants& k) {
    const Index positions = a.cols() - k.window + 1;
    if (positions <= 0) return 0.0;
    std::vector<double> partial(static_cast<std::size_t>(positions), 0.0);
#pragma omp parallel for schedule(static)
    for (Index c0 = 0; c0 < positions; ++c0) partial[static_cast<std::size_t>(c0)] = column_sum(a, b, k, c0);
    double total = 0.0;
    for (const double s : partial) total += s;
    return total;
}

namespace serial {

double ssim_sum(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const SsimConstants& k) {
    double total = 0.0;
    for (Index c0 = 0; c0 + k.window <= a.cols(); ++c0) {
        for (Index r0 = 0; r0 + k.window <= a.rows(); ++r0) total += window_ssim(a, b, k, r0, c0);
    }
    return total;
}

}  // namespace serial

}  // namespace elasto::kernels
