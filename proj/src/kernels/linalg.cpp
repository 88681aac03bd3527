#include <algorithm>
#include <vector>

#include "elasto/kernels.hpp"

namespace elasto::kernels {

namespace {

// Fixed chunk size: the reduction tree depends only on the vector length.
constexpr Index kDotChunk = 4096;

inline double row_product(const SparseSystem& s, const Eigen::VectorXd& x, Index row) {
    double acc = 0.0;
    const auto end = s.row_ptr[static_cast<std::size_t>(row + 1)];
    for (auto p = s.row_ptr[static_cast<std::size_t>(row)]; p < end; ++p) {
        acc += s.values[static_cast<std::size_t>(p)] * x(s.col_idx[static_cast<std::size_t>(p)]);
    }
    return acc;
}

}  // namespace

void spmv(const SparseSystem& system, const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    const Index size = system.size();
    y.resize(size);
#pragma omp parallel for schedule(static)
    for (Index r = 0; r < size; ++r) y(r) = row_product(system, x, r);
}

double dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Index size = a.size();
    const Index chunks = (size + kDotChunk - 1) / kDotChunk;
    std::vector<double> partial(static_cast<std::size_t>(chunks), 0.0);
#pragma omp parallel for schedule(static)
    for (Index c = 0; c < chunks; ++c) {
        const Index lo = c * kDotChunk;
        const Index hi = std::min(size, lo + kDotChunk);
        double s = 0.0;
        for (Index k = lo; k < hi; ++k) s += a(k) * b(k);
        partial[static_cast<std::size_t>(c)] = s;
    }
    double total = 0.0;
    for (const double s : partial) total += s;
    return total;
}

namespace serial {

void spmv(const SparseSystem& system, const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    y.resize(system.size());
    for (Index r = 0; r < system.size(); ++r) y(r) = row_product(system, x, r);
}

double dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double total = 0.0;
    for (Index k = 0; k < a.size(); ++k) total += a(k) * b(k);
    return total;
}

}  // namespace serial

}  // namespace elasto::kernels
