#include <algorithm>

#include "elasto/kernels.hpp"

namespace elasto::kernels {

namespace {

// Kernel tap k applies to offset k - half; edges replicate the border sample.
void axial_column(const Eigen::MatrixXf& in, std::span<const double> taps, Index j, Eigen::MatrixXd& out) {
    const Index m = in.rows();
    const Index half = static_cast<Index>(taps.size() / 2);
    for (Index i = 0; i < m; ++i) {
        double acc = 0.0;
        for (Index k = 0; k < static_cast<Index>(taps.size()); ++k) {
            acc += taps[static_cast<std::size_t>(k)] * in(std::clamp<Index>(i + k - half, 0, m - 1), j);
        }
        out(i, j) = acc;
    }
}

void lateral_column(const Eigen::MatrixXd& in, std::span<const double> taps, Index j, Eigen::MatrixXf& out) {
    const Index n = in.cols();
    const Index half = static_cast<Index>(taps.size() / 2);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(in.rows());
    for (Index k = 0; k < static_cast<Index>(taps.size()); ++k) {
        acc += taps[static_cast<std::size_t>(k)] * in.col(std::clamp<Index>(j + k - half, 0, n - 1));
    }
    out.col(j) = acc.cast<float>();
}

}  // namespace

void separable_filter(const Eigen::MatrixXf& in, std::span<const double> axial, std::span<const double> lateral,
                      Eigen::MatrixXf& out) {
    Eigen::MatrixXd tmp(in.rows(), in.cols());
    const Index n = in.cols();
#pragma omp parallel for schedule(static)
    for (Index j = 0; j < n; ++j) axial_column(in, axial, j, tmp);
    out.resize(in.rows(), in.cols());
#pragma omp parallel for schedule(static)
    for (Index j = 0; j < n; ++j) lateral_column(tmp, lateral, j, out);
}

namespace serial {

void separable_filter(const Eigen::MatrixXf& in, std::span<const double> axial, std::span<const double> lateral,
                      Eigen::MatrixXf& out) {
    Eigen::MatrixXd tmp(in.rows(), in.cols());
    for (Index j = 0; j < in.cols(); ++j) axial_column(in, axial, j, tmp);
    out.resize(in.rows(), in.cols());
    for (Index j = 0; j < in.cols(); ++j) lateral_column(tmp, lateral, j, out);
}

}  // namespace serial

}  // namespace elasto::kernels
