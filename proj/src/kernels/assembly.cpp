#include <algorithm>
#include <cmath>
#include <vector>

#include "elasto/kernels.hpp"

namespace elasto::kernels {

WarpSample warp_sample(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& post, Index i, Index j, double a,
                       double l) {
    const Index m = post.rows();
    const Index n = post.cols();
    double r = static_cast<double>(i) + a;
    double c = static_cast<double>(j) + l;
    const bool clamped_r = !(r >= 0.0 && r <= static_cast<double>(m - 1));
    const bool clamped_c = !(c >= 0.0 && c <= static_cast<double>(n - 1));
    r = std::clamp(r, 0.0, static_cast<double>(m - 1));
    c = std::clamp(c, 0.0, static_cast<double>(n - 1));
    const Index i0 = std::min<Index>(static_cast<Index>(r), m - 2);
    const Index j0 = std::min<Index>(static_cast<Index>(c), n - 2);
    const double fr = r - static_cast<double>(i0);
    const double fc = c - static_cast<double>(j0);

    // Interpolant restricted to a grid row / grid column through the cell.
    const auto along_row = [&](Index ii) { return (1.0 - fc) * post(ii, j0) + fc * post(ii, j0 + 1); };
    const auto along_col = [&](Index jj) { return (1.0 - fr) * post(i0, jj) + fr * post(i0 + 1, jj); };

    WarpSample s;
    const double value = (1.0 - fr) * along_row(i0) + fr * along_row(i0 + 1);
    s.residual = pre(i, j) - value;

    if (!clamped_r) {
        if (fr == 0.0 && i0 > 0) {
            s.grad_axial = 0.5 * (along_row(i0 + 1) - along_row(i0 - 1));
        } else {
            s.grad_axial = along_row(i0 + 1) - along_row(i0);
        }
    }
    if (!clamped_c) {
        if (fc == 0.0 && j0 > 0) {
            s.grad_lateral = 0.5 * (along_col(j0 + 1) - along_col(j0 - 1));
        } else {
            s.grad_lateral = along_col(j0 + 1) - along_col(j0);
        }
    }
    return s;
}

namespace {

// Builds the fixed sparsity pattern: per unknown, same-component neighbours
// (i, j-1), (i-1, j), the 2x2 data block, (i+1, j), (i, j+1), columns ascending.
void build_pattern(GridDims grid, SparseSystem& sys) {
    const Index m = grid.rows;
    const Index n = grid.cols;
    const Index size = 2 * m * n;
    sys.grid = grid;
    sys.row_ptr.assign(static_cast<std::size_t>(size + 1), 0);
    sys.col_idx.clear();
    sys.col_idx.reserve(static_cast<std::size_t>(size * 7));
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < m; ++i) {
            for (int comp = 0; comp < 2; ++comp) {
                const Index k = unknown_index(i, j, m, comp);
                const auto push = [&](Index col) { sys.col_idx.push_back(static_cast<std::int32_t>(col)); };
                if (j > 0) push(k - 2 * m);
                if (i > 0) push(k - 2);
                push(unknown_index(i, j, m, 0));
                push(unknown_index(i, j, m, 1));
                if (i + 1 < m) push(k + 2);
                if (j + 1 < n) push(k + 2 * m);
                sys.row_ptr[static_cast<std::size_t>(k + 1)] = static_cast<std::int64_t>(sys.col_idx.size());
            }
        }
    }
    sys.values.assign(sys.col_idx.size(), 0.0);
    sys.rhs.setZero(size);
}

// Fills both rows of sample (i, j). Writes only to those rows.
void assemble_sample(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& post, const DisplacementField& field,
                     const RegularizationWeights& w, Index i, Index j, SparseSystem& sys) {
    const Index m = sys.grid.rows;
    const Index n = sys.grid.cols;
    const WarpSample ws = warp_sample(pre, post, i, j, field.axial(i, j), field.lateral(i, j));
    const double g[2] = {ws.grad_axial, ws.grad_lateral};

    for (int comp = 0; comp < 2; ++comp) {
        const Eigen::MatrixXd& x = comp == 0 ? field.axial : field.lateral;
        const double w_axial = comp == 0 ? w.alpha_axial : w.beta_axial;
        const double w_lateral = comp == 0 ? w.alpha_lateral : w.beta_lateral;
        const Index k = unknown_index(i, j, m, comp);
        auto pos = static_cast<std::size_t>(sys.row_ptr[static_cast<std::size_t>(k)]);

        double diag = g[comp] * g[comp];
        double rhs = g[comp] * ws.residual;
        const double xc = x(i, j);
        double* diag_slot = nullptr;

        if (j > 0) {
            sys.values[pos++] = -w_lateral;
            diag += w_lateral;
            rhs -= w_lateral * (xc - x(i, j - 1));
        }
        if (i > 0) {
            sys.values[pos++] = -w_axial;
            diag += w_axial;
            rhs -= w_axial * (xc - x(i - 1, j));
        }
        if (comp == 0) {
            diag_slot = &sys.values[pos++];
            sys.values[pos++] = g[0] * g[1];
        } else {
            sys.values[pos++] = g[0] * g[1];
            diag_slot = &sys.values[pos++];
        }
        if (i + 1 < m) {
            sys.values[pos++] = -w_axial;
            diag += w_axial;
            rhs -= w_axial * (xc - x(i + 1, j));
        }
        if (j + 1 < n) {
            sys.values[pos++] = -w_lateral;
            diag += w_lateral;
            rhs -= w_lateral * (xc - x(i, j + 1));
        }
        *diag_slot = diag;
        sys.rhs(k) = rhs;
    }
}

void check_dims(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& post, const DisplacementField& field) {
    if (pre.rows() != post.rows() || pre.cols() != post.cols() || field.axial.rows() != pre.rows() ||
        field.axial.cols() != pre.cols() || field.lateral.rows() != pre.rows() || field.lateral.cols() != pre.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "frames and displacement field differ in size");
    }
    if (pre.rows() < 2 || pre.cols() < 2) throw Error(ErrorCode::DimensionMismatch, "frames must be at least 2x2");
}

}  // namespace

void assemble_system(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& post, const DisplacementField& field,
                     const RegularizationWeights& weights, SparseSystem& system) {
    check_dims(pre, post, field);
    build_pattern({pre.rows(), pre.cols()}, system);
    const Index n = pre.cols();
    const Index m = pre.rows();
#pragma omp parallel for schedule(static)
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < m; ++i) assemble_sample(pre, post, field, weights, i, j, system);
    }
}

double data_cost(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& post, const DisplacementField& field) {
    check_dims(pre, post, field);
    const Index m = pre.rows();
    const Index n = pre.cols();
    std::vector<double> per_line(static_cast<std::size_t>(n), 0.0);
#pragma omp parallel for schedule(static)
    for (Index j = 0; j < n; ++j) {
        double s = 0.0;
        for (Index i = 0; i < m; ++i) {
            const double r = warp_sample(pre, post, i, j, field.axial(i, j), field.lateral(i, j)).residual;
            s += r * r;
        }
        per_line[static_cast<std::size_t>(j)] = s;
    }
    double total = 0.0;
    for (const double s : per_line) total += s;
    return total;
}

namespace serial {

void assemble_system(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& post, const DisplacementField& field,
                     const RegularizationWeights& weights, SparseSystem& system) {
    check_dims(pre, post, field);
    build_pattern({pre.rows(), pre.cols()}, system);
    for (Index j = 0; j < pre.cols(); ++j) {
        for (Index i = 0; i < pre.rows(); ++i) assemble_sample(pre, post, field, weights, i, j, system);
    }
}

double data_cost(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& post, const DisplacementField& field) {
    check_dims(pre, post, field);
    double total = 0.0;
    for (Index j = 0; j < pre.cols(); ++j) {
        for (Index i = 0; i < pre.rows(); ++i) {
            const double r = warp_sample(pre, post, i, j, field.axial(i, j), field.lateral(i, j)).residual;
            total += r * r;
        }
    }
    return total;
}

}  // namespace serial

}  // namespace elasto::kernels
