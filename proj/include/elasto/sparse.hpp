#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "elasto/rf_core.hpp"

namespace elasto {

/// Position of unknown `component` (0 = axial, 1 = lateral) of sample (i, j)
/// in the interleaved, column-major unknown vector.
inline Index unknown_index(Index i, Index j, Index rows, int component) noexcept {
    return 2 * (i + j * rows) + component;
}

/// Symmetric sparse system in CSR form. Columns within a row are sorted.
struct SparseSystem {
    GridDims grid;
    std::vector<std::int64_t> row_ptr;
    std::vector<std::int32_t> col_idx;
    std::vector<double> values;
    Eigen::VectorXd rhs;

    Index size() const noexcept { return rhs.size(); }
    std::size_t nonzeros() const noexcept { return values.size(); }

    double coeff(Index row, Index col) const;
    double diagonal(Index row) const { return coeff(row, row); }
    Eigen::MatrixXd to_dense() const;
    bool is_symmetric() const;

    /// Keeps every nonzero of `dense`; the diagonal is always stored.
    static SparseSystem from_dense(GridDims grid, const Eigen::MatrixXd& dense, Eigen::VectorXd rhs);
};

/// q(x) = 0.5 x'Mx - b'x, i.e. the quadratic model relative to x = 0.
double quadratic_model(const SparseSystem& system, const Eigen::VectorXd& x);

struct PcgOptions {
    double tolerance = 1e-5;
    int max_iterations = 5000;
};

struct PcgResult {
    Eigen::VectorXd solution;
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

/// Conjugate gradients with a 2x2 block-Jacobi preconditioner.
/// Throws SingularSystem on a zero diagonal or a non-positive curvature step.
/// On hitting max_iterations returns the iterate with the smallest residual
/// and converged = false.
PcgResult solve_pcg(const SparseSystem& system, const PcgOptions& options);

/// Text dump: header line, then "A row col value" per nonzero and "b row value".
void write_triplets(const SparseSystem& system, std::ostream& out);

}  // namespace elasto
