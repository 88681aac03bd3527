#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <tuple>

#include "elasto/kernels.hpp"

namespace elasto::kernels {

namespace {

struct BlockStats {
    double mean = 0.0;
    double energy = 0.0;  // sum of squared deviations
};

BlockStats stats(const Eigen::MatrixXd& img, Index r0, Index c0, Index br, Index bc) {
    const auto block = img.block(r0, c0, br, bc);
    BlockStats s;
    s.mean = block.mean();
    s.energy = (block.array() - s.mean).square().sum();
    return s;
}

bool inside(const Eigen::MatrixXd& img, Index r0, Index c0, Index br, Index bc) {
    return r0 >= 0 && c0 >= 0 && r0 + br <= img.rows() && c0 + bc <= img.cols();
}

std::optional<double> ncc_with(const Eigen::MatrixXd& pre, const BlockStats& ref, const Eigen::MatrixXd& post,
                               Index r0, Index c0, Index br, Index bc, Index da, Index dl) {
    if (!inside(post, r0 + da, c0 + dl, br, bc)) return std::nullopt;
    const auto a = pre.block(r0, c0, br, bc);
    const auto b = post.block(r0 + da, c0 + dl, br, bc);
    const double mean_b = b.mean();
    double cross = 0.0;
    double energy_b = 0.0;
    for (Index c = 0; c < bc; ++c) {
        for (Index r = 0; r < br; ++r) {
            const double db = b(r, c) - mean_b;
            cross += (a(r, c) - ref.mean) * db;
            energy_b += db * db;
        }
    }
    if (ref.energy <= 0.0 || energy_b <= 0.0) return 0.0;
    return std::clamp(cross / std::sqrt(ref.energy * energy_b), -1.0, 1.0);
}

// Vertex offset of the parabola through (-1, cm), (0, c0), (+1, cp).
double parabolic_offset(std::optional<double> cm, double c0, std::optional<double> cp) {
    if (!cm || !cp) return 0.0;
    const double denom = *cm - 2.0 * c0 + *cp;
    if (!(denom < 0.0)) return 0.0;
    return std::clamp(0.5 * (*cm - *cp) / denom, -0.5, 0.5);
}

// Largest value of the 3-point parabola within half a lag of the centre.
double ridge_value(std::optional<double> cm, double c0, std::optional<double> cp) {
    if (!cm || !cp) return c0;
    const double denom = *cm - 2.0 * c0 + *cp;
    const double slope = 0.5 * (*cp - *cm);
    double x = denom < 0.0 ? -slope / denom : (slope > 0.0 ? 0.5 : -0.5);
    x = std::clamp(x, -0.5, 0.5);
    return std::max(c0, c0 + x * slope + 0.5 * x * x * denom);
}

// Ties go to the lag with the smaller |axial|, then smaller |lateral|, then the
// more negative axial and lateral value.
bool preferred(Index da, Index dl, Index best_da, Index best_dl) {
    return std::make_tuple(std::abs(da), std::abs(dl), da, dl) <
           std::make_tuple(std::abs(best_da), std::abs(best_dl), best_da, best_dl);
}

BlockMatch match_one(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& post, Index br, Index bc,
                     const BlockTask& t) {
    BlockMatch result;
    if (!inside(pre, t.row0, t.col0, br, bc)) return result;
    const BlockStats ref = stats(pre, t.row0, t.col0, br, bc);

    double best = -std::numeric_limits<double>::infinity();
    Index best_da = 0;
    Index best_dl = 0;
    bool found = false;
    for (Index dl = t.predicted_lateral - t.search_lateral; dl <= t.predicted_lateral + t.search_lateral; ++dl) {
        for (Index da = t.predicted_axial - t.search_axial; da <= t.predicted_axial + t.search_axial; ++da) {
            const auto v = ncc_with(pre, ref, post, t.row0, t.col0, br, bc, da, dl);
            if (!v) continue;
            if (!found || *v > best || (*v == best && preferred(da, dl, best_da, best_dl))) {
                best = *v;
                best_da = da;
                best_dl = dl;
                found = true;
            }
        }
    }
    if (!found) return result;

    const auto at = [&](Index da, Index dl) { return ncc_with(pre, ref, post, t.row0, t.col0, br, bc, da, dl); };
    result.peak = best;
    // A perfect match is an exact integer alignment; the parabola would only
    // pick up the asymmetry of the block autocorrelation.
    if (best >= 1.0 - 1e-12) {
        result.axial = static_cast<double>(best_da);
        result.lateral = static_cast<double>(best_dl);
        return result;
    }
    result.axial = static_cast<double>(best_da) + parabolic_offset(at(best_da - 1, best_dl), best, at(best_da + 1, best_dl));
    // The RF correlation peak is narrow axially and often tilted, so the
    // lateral fit uses the axial ridge maximum of each neighbouring line
    // rather than the values at the integer axial lag.
    const auto ridge = [&](Index dl) -> std::optional<double> {
        const auto c0 = at(best_da, dl);
        if (!c0) return std::nullopt;
        return ridge_value(at(best_da - 1, dl), *c0, at(best_da + 1, dl));
    };
    const double centre = ridge_value(at(best_da - 1, best_dl), best, at(best_da + 1, best_dl));
    result.lateral = static_cast<double>(best_dl) + parabolic_offset(ridge(best_dl - 1), centre, ridge(best_dl + 1));
    return result;
}

}  // namespace

std::optional<double> block_ncc(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& post, Index row0, Index col0,
                                Index block_rows, Index block_cols, Index da, Index dl) {
    if (!inside(pre, row0, col0, block_rows, block_cols)) return std::nullopt;
    return ncc_with(pre, stats(pre, row0, col0, block_rows, block_cols), post, row0, col0, block_rows, block_cols,
                    da, dl);
}

void match_blocks(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& post, Index block_rows, Index block_cols,
                  std::span<const BlockTask> tasks, std::span<BlockMatch> out) {
    const auto count = static_cast<std::ptrdiff_t>(tasks.size());
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t k = 0; k < count; ++k) out[k] = match_one(pre, post, block_rows, block_cols, tasks[k]);
}

namespace serial {

void match_blocks(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& post, Index block_rows, Index block_cols,
                  std::span<const BlockTask> tasks, std::span<BlockMatch> out) {
    for (std::size_t k = 0; k < tasks.size(); ++k) out[k] = match_one(pre, post, block_rows, block_cols, tasks[k]);
}

}  // namespace serial

}  // namespace elasto::kernels
