#include "elasto/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "elasto/kernels.hpp"

namespace elasto {

double SparseSystem::coeff(Index row, Index col) const {
    const auto begin = col_idx.begin() + row_ptr[static_cast<std::size_t>(row)];
    const auto end = col_idx.begin() + row_ptr[static_cast<std::size_t>(row + 1)];
    const auto it = std::lower_bound(begin, end, static_cast<std::int32_t>(col));
    if (it == end || *it != col) return 0.0;
    return values[static_cast<std::size_t>(it - col_idx.begin())];
}

Eigen::MatrixXd SparseSystem::to_dense() const {
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(size(), size());
    for (Index r = 0; r < size(); ++r) {
        for (auto p = row_ptr[static_cast<std::size_t>(r)]; p < row_ptr[static_cast<std::size_t>(r + 1)]; ++p) {
            dense(r, col_idx[static_cast<std::size_t>(p)]) = values[static_cast<std::size_t>(p)];
        }
    }
    return dense;
}

bool SparseSystem::is_symmetric() const {
    for (Index r = 0; r < size(); ++r) {
        for (auto p = row_ptr[static_cast<std::size_t>(r)]; p < row_ptr[static_cast<std::size_t>(r + 1)]; ++p) {
            if (coeff(col_idx[static_cast<std::size_t>(p)], r) != values[static_cast<std::size_t>(p)]) return false;
        }
    }
    return true;
}

SparseSystem SparseSystem::from_dense(GridDims grid, const Eigen::MatrixXd& dense, Eigen::VectorXd rhs) {
    if (dense.rows() != dense.cols() || dense.rows() != rhs.size()) {
        throw Error(ErrorCode::DimensionMismatch, "dense system must be square and match rhs");
    }
    SparseSystem s;
    s.grid = grid;
    s.rhs = std::move(rhs);
    s.row_ptr.assign(static_cast<std::size_t>(dense.rows() + 1), 0);
    for (Index r = 0; r < dense.rows(); ++r) {
        for (Index c = 0; c < dense.cols(); ++c) {
            if (dense(r, c) != 0.0 || r == c) {
                s.col_idx.push_back(static_cast<std::int32_t>(c));
                s.values.push_back(dense(r, c));
            }
        }
        s.row_ptr[static_cast<std::size_t>(r + 1)] = static_cast<std::int64_t>(s.col_idx.size());
    }
    return s;
}

double quadratic_model(const SparseSystem& system, const Eigen::VectorXd& x) {
    Eigen::VectorXd mx;
    kernels::spmv(system, x, mx);
    return 0.5 * kernels::dot(x, mx) - kernels::dot(system.rhs, x);
}

namespace {

// 2x2 block-Jacobi preconditioner over the (axial, lateral) pair of each sample.
struct BlockJacobi {
    Eigen::VectorXd a, b, d;  // inverse blocks [[a, b], [b, d]]

    explicit BlockJacobi(const SparseSystem& s) {
        const Index pairs = s.size() / 2;
        a.resize(pairs);
        b.resize(pairs);
        d.resize(pairs);
        for (Index p = 0; p < pairs; ++p) {
            const double d0 = s.diagonal(2 * p);
            const double d1 = s.diagonal(2 * p + 1);
            const double c = s.coeff(2 * p, 2 * p + 1);
            const double det = d0 * d1 - c * c;
            if (det > 1e-12 * d0 * d1) {
                a(p) = d1 / det;
                b(p) = -c / det;
                d(p) = d0 / det;
            } else {
                a(p) = 1.0 / d0;
                b(p) = 0.0;
                d(p) = 1.0 / d1;
            }
        }
    }

    void apply(const Eigen::VectorXd& r, Eigen::VectorXd& z) const {
        z.resize(r.size());
        const Index pairs = a.size();
        for (Index p = 0; p < pairs; ++p) {
            const double r0 = r(2 * p);
            const double r1 = r(2 * p + 1);
            z(2 * p) = a(p) * r0 + b(p) * r1;
            z(2 * p + 1) = b(p) * r0 + d(p) * r1;
        }
    }
};

}  // namespace

PcgResult solve_pcg(const SparseSystem& system, const PcgOptions& options) {
    const Index size = system.size();
    if (size % 2 != 0) throw Error(ErrorCode::DimensionMismatch, "system size must be even (two unknowns per sample)");
    for (Index k = 0; k < size; ++k) {
        if (!(system.diagonal(k) > 0.0)) {
            throw Error(ErrorCode::SingularSystem,
                        "non-positive diagonal at unknown " + std::to_string(k) + " (no data gradient, no regularisation)");
        }
    }

    PcgResult result;
    result.solution = Eigen::VectorXd::Zero(size);
    const double rhs_norm = std::sqrt(kernels::dot(system.rhs, system.rhs));
    if (rhs_norm == 0.0) {
        result.converged = true;
        return result;
    }

    const BlockJacobi precond(system);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(size);
    Eigen::VectorXd r = system.rhs;
    Eigen::VectorXd z, q;
    precond.apply(r, z);
    Eigen::VectorXd p = z;
    double rz = kernels::dot(r, z);
    double best = 1.0;

    for (int it = 1; it <= options.max_iterations; ++it) {
        kernels::spmv(system, p, q);
        const double curvature = kernels::dot(p, q);
        if (!(curvature > 0.0)) {
            throw Error(ErrorCode::SingularSystem, "non-positive curvature at iteration " + std::to_string(it));
        }
        const double alpha = rz / curvature;
        x += alpha * p;
        r -= alpha * q;
        const double rel = std::sqrt(kernels::dot(r, r)) / rhs_norm;
        result.iterations = it;
        if (rel < best) {
            best = rel;
            result.solution = x;
            result.relative_residual = rel;
        }
        if (rel <= options.tolerance) {
            result.converged = true;
            return result;
        }
        precond.apply(r, z);
        const double rz_next = kernels::dot(r, z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    if (best == 1.0) result.relative_residual = 1.0;
    return result;
}

void write_triplets(const SparseSystem& system, std::ostream& out) {
    char buf[96];
    out << "# elasto-system rows=" << system.grid.rows << " cols=" << system.grid.cols
        << " unknowns=" << system.size() << " nnz=" << system.nonzeros() << '\n';
    for (Index r = 0; r < system.size(); ++r) {
        for (auto p = system.row_ptr[static_cast<std::size_t>(r)]; p < system.row_ptr[static_cast<std::size_t>(r + 1)];
             ++p) {
            const int len = std::snprintf(buf, sizeof(buf), "A %lld %d %.17g\n", static_cast<long long>(r),
                                          system.col_idx[static_cast<std::size_t>(p)],
                                          system.values[static_cast<std::size_t>(p)]);
            out.write(buf, len);
        }
    }
    for (Index r = 0; r < system.size(); ++r) {
        const int len = std::snprintf(buf, sizeof(buf), "b %lld %.17g\n", static_cast<long long>(r), system.rhs(r));
        out.write(buf, len);
    }
}

}  // namespace elasto
