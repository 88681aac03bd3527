#include <algorithm>

#include "elasto/kernels.hpp"

namespace elasto::kernels {

namespace {

void slope_column(const Eigen::MatrixXd& values, int window_len, Index j, Eigen::MatrixXd& out) {
    const Index m = values.rows();
    const Index half = window_len / 2;
    for (Index i = 0; i < m; ++i) {
        Index lo = std::max<Index>(0, i - half);
        Index hi = std::min<Index>(m - 1, i + half);
        // Keep at least three points near the edges.
        if (hi - lo < 2) {
            if (lo == 0) hi = std::min<Index>(m - 1, 2);
            else lo = std::max<Index>(0, m - 3);
        }
        const double center = 0.5 * static_cast<double>(lo + hi);
        double sxy = 0.0;
        double sxx = 0.0;
        for (Index k = lo; k <= hi; ++k) {
            const double dx = static_cast<double>(k) - center;
            sxy += dx * values(k, j);
            sxx += dx * dx;
        }
        out(i, j) = sxy / sxx;
    }
}

}  // namespace

void lsq_slope_columns(const Eigen::MatrixXd& values, int window_len, Eigen::MatrixXd& out) {
    out.resize(values.rows(), values.cols());
    const Index n = values.cols();
#pragma omp parallel for schedule(static)
    for (Index j = 0; j < n; ++j) slope_column(values, window_len, j, out);
}

namespace serial {

void lsq_slope_columns(const Eigen::MatrixXd& values, int window_len, Eigen::MatrixXd& out) {
    out.resize(values.rows(), values.cols());
    for (Index j = 0; j < values.cols(); ++j) slope_column(values, window_len, j, out);
}

}  // namespace serial

}  // namespace elasto::kernels
