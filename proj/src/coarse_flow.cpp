#include "elasto/coarse_flow.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "elasto/kernels.hpp"

namespace elasto {

void CoarseParams::validate() const {
    if (levels < 1) throw Error(ErrorCode::InvalidArgument, "coarse levels must be >= 1");
    if (block.axial < 3 || block.lateral < 3) throw Error(ErrorCode::InvalidArgument, "block dims must be >= 3");
    if (search.axial < 1 || search.lateral < 1 || rf_search.axial < 1 || rf_search.lateral < 1) {
        throw Error(ErrorCode::InvalidArgument, "search dims must be >= 1");
    }
    if (!(min_correlation >= 0.0 && min_correlation < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "min_correlation must lie in [0, 1)");
    }
    if (median_window < 1) throw Error(ErrorCode::InvalidArgument, "median window must be >= 1");
    if (median_window % 2 == 0) throw Error(ErrorCode::EvenWindow, "median window must be odd");
}

namespace {

// Halves the axial axis only: frames rarely have more than a few hundred
// lines, and lateral decimation would blur lateral shear in the displacement.
Eigen::MatrixXd downsample(const Eigen::MatrixXd& src) {
    Eigen::MatrixXd out(src.rows() / 2, src.cols());
    for (Index j = 0; j < out.cols(); ++j) {
        for (Index i = 0; i < out.rows(); ++i) out(i, j) = 0.5 * (src(2 * i, j) + src(2 * i + 1, j));
    }
    return out;
}

bool fits(const Eigen::MatrixXd& img, const CoarseParams& p) {
    return img.rows() >= p.block.axial + 2 * p.search.axial && img.cols() >= p.block.lateral + 2 * p.search.lateral;
}

// Level 0 is the RF itself. Coarser levels decimate the rectified RF, which
// keeps the speckle envelope but avoids aliasing the carrier.
std::vector<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> build_pyramid(const RfFrame& pre, const RfFrame& post,
                                                                       const CoarseParams& p) {
    std::vector<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> pyramid;
    pyramid.emplace_back(pre.samples().cast<double>(), post.samples().cast<double>());
    Eigen::MatrixXd a = pyramid.front().first.cwiseAbs();
    Eigen::MatrixXd b = pyramid.front().second.cwiseAbs();
    for (int level = 1; level < p.levels; ++level) {
        if (a.rows() < 4) break;
        a = downsample(a);
        b = downsample(b);
        if (!fits(a, p)) break;
        pyramid.emplace_back(a, b);
    }
    return pyramid;
}

struct BlockGrid {
    Index rows = 0;  // number of block positions along each axis
    Index cols = 0;
    Index step_axial = 1;
    Index step_lateral = 1;
    double center_row0 = 0.0;  // centre of the first block
    double center_col0 = 0.0;

    double center_row(Index k) const { return center_row0 + static_cast<double>(k * step_axial); }
    double center_col(Index k) const { return center_col0 + static_cast<double>(k * step_lateral); }
};

BlockGrid make_grid(const Eigen::MatrixXd& img, const CoarseParams& p) {
    BlockGrid g;
    g.step_axial = std::max<Index>(1, p.block.axial / 2);
    g.step_lateral = std::max<Index>(1, p.block.lateral / 2);
    g.rows = (img.rows() - p.block.axial) / g.step_axial + 1;
    g.cols = (img.cols() - p.block.lateral) / g.step_lateral + 1;
    g.center_row0 = 0.5 * static_cast<double>(p.block.axial - 1);
    g.center_col0 = 0.5 * static_cast<double>(p.block.lateral - 1);
    return g;
}

double median_of(std::vector<double>& v) {
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1) return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(v.begin(), mid);
    return 0.5 * (lower + upper);
}

// Invalid blocks take the median of valid 8-neighbours, sweeping until every
// block is filled. Each sweep reads the previous sweep's state only.
void fill_invalid(Eigen::MatrixXd& axial, Eigen::MatrixXd& lateral, std::vector<char>& valid,
                  const Eigen::MatrixXd& fallback_axial, const Eigen::MatrixXd& fallback_lateral) {
    const Index rows = axial.rows();
    const Index cols = axial.cols();
    const auto at = [rows](Index i, Index j) { return static_cast<std::size_t>(i + j * rows); };
    if (std::none_of(valid.begin(), valid.end(), [](char v) { return v != 0; })) {
        axial = fallback_axial;
        lateral = fallback_lateral;
        std::fill(valid.begin(), valid.end(), 1);
        return;
    }
    std::vector<double> na, nl;
    bool pending = true;
    while (pending) {
        pending = false;
        const std::vector<char> snapshot = valid;
        const Eigen::MatrixXd snap_a = axial;
        const Eigen::MatrixXd snap_l = lateral;
        for (Index j = 0; j < cols; ++j) {
            for (Index i = 0; i < rows; ++i) {
                if (snapshot[at(i, j)]) continue;
                na.clear();
                nl.clear();
                for (Index dj = -1; dj <= 1; ++dj) {
                    for (Index di = -1; di <= 1; ++di) {
                        const Index ii = i + di;
                        const Index jj = j + dj;
                        if ((di == 0 && dj == 0) || ii < 0 || jj < 0 || ii >= rows || jj >= cols) continue;
                        if (!snapshot[at(ii, jj)]) continue;
                        na.push_back(snap_a(ii, jj));
                        nl.push_back(snap_l(ii, jj));
                    }
                }
                if (na.empty()) {
                    pending = true;
                    continue;
                }
                axial(i, j) = median_of(na);
                lateral(i, j) = median_of(nl);
                valid[at(i, j)] = 1;
            }
        }
    }
}

DisplacementField interpolate_centers(const DisplacementField& grid_values, const BlockGrid& g, GridDims dst) {
    DisplacementField out = DisplacementField::zeros(dst);
    for (Index j = 0; j < dst.cols; ++j) {
        const double v = (static_cast<double>(j) - g.center_col0) / static_cast<double>(g.step_lateral);
        for (Index i = 0; i < dst.rows; ++i) {
            const double u = (static_cast<double>(i) - g.center_row0) / static_cast<double>(g.step_axial);
            out.axial(i, j) = sample_bilinear(grid_values.axial, u, v);
            out.lateral(i, j) = sample_bilinear(grid_values.lateral, u, v);
        }
    }
    return out;
}

}  // namespace

CoarseResult estimate_coarse_detailed(const RfFrame& pre, const RfFrame& post, const CoarseParams& params) {
    params.validate();
    if (pre.dims() != post.dims()) throw Error(ErrorCode::DimensionMismatch, "pre and post frames differ in size");
    if (pre.rows() < params.block.axial + 2 * params.search.axial ||
        pre.cols() < params.block.lateral + 2 * params.search.lateral) {
        throw Error(ErrorCode::InvalidArgument, "frame smaller than block + 2 x search");
    }

    const auto pyramid = build_pyramid(pre, post, params);
    const int top = static_cast<int>(pyramid.size()) - 1;

    CoarseResult result;
    DisplacementField previous;  // dense estimate at level + 1, in that level's units
    for (int level = top; level >= 0; --level) {
        const auto& [a, b] = pyramid[static_cast<std::size_t>(level)];
        const BlockGrid g = make_grid(a, params);
        const Extent search = level == 0 && top > 0 ? params.rf_search : params.search;

        Eigen::MatrixXd pred_a = Eigen::MatrixXd::Zero(g.rows, g.cols);
        Eigen::MatrixXd pred_l = Eigen::MatrixXd::Zero(g.rows, g.cols);
        if (level != top) {
            for (Index kj = 0; kj < g.cols; ++kj) {
                for (Index ki = 0; ki < g.rows; ++ki) {
                    // A row p one level up covers rows 2p and 2p + 1 here.
                    const double r = 0.5 * (g.center_row(ki) - 0.5);
                    const double c = g.center_col(kj);
                    pred_a(ki, kj) = 2.0 * sample_bilinear(previous.axial, r, c);
                    pred_l(ki, kj) = sample_bilinear(previous.lateral, r, c);
                }
            }
        }

        std::vector<kernels::BlockTask> tasks;
        tasks.reserve(static_cast<std::size_t>(g.rows * g.cols));
        for (Index kj = 0; kj < g.cols; ++kj) {
            for (Index ki = 0; ki < g.rows; ++ki) {
                kernels::BlockTask t;
                t.row0 = ki * g.step_axial;
                t.col0 = kj * g.step_lateral;
                t.predicted_axial = static_cast<Index>(std::lround(pred_a(ki, kj)));
                t.predicted_lateral = static_cast<Index>(std::lround(pred_l(ki, kj)));
                t.search_axial = search.axial;
                t.search_lateral = search.lateral;
                tasks.push_back(t);
            }
        }
        std::vector<kernels::BlockMatch> matches(tasks.size());
        kernels::match_blocks(a, b, params.block.axial, params.block.lateral, tasks, matches);

        DisplacementField blocks = DisplacementField::zeros({g.rows, g.cols});
        std::vector<char> valid(tasks.size(), 0);
        CoarseLevelStats stats;
        stats.level = level;
        stats.blocks = static_cast<Index>(tasks.size());
        double peak_sum = 0.0;
        for (std::size_t k = 0; k < matches.size(); ++k) {
            const Index ki = static_cast<Index>(k) % g.rows;
            const Index kj = static_cast<Index>(k) / g.rows;
            blocks.axial(ki, kj) = matches[k].axial;
            blocks.lateral(ki, kj) = matches[k].lateral;
            valid[k] = matches[k].peak >= params.min_correlation && matches[k].peak > -1.0;
            stats.valid += valid[k];
            peak_sum += std::max(matches[k].peak, -1.0);
        }
        stats.mean_peak = peak_sum / static_cast<double>(matches.size());
        result.levels.push_back(stats);

        fill_invalid(blocks.axial, blocks.lateral, valid, pred_a, pred_l);
        blocks = median_filter_field(blocks, params.median_window);
        previous = interpolate_centers(blocks, g, {a.rows(), a.cols()});
    }
    result.field = std::move(previous);
    return result;
}

DisplacementField import_external_flow(const std::filesystem::path& path, GridDims rf_dims) {
    DisplacementField field = load_field(path, format_for(path));
    if (field.dims() == rf_dims) return field;
    return resample_field(field, rf_dims);
}

DisplacementField median_filter_field(const DisplacementField& field, int window) {
    if (window < 1) throw Error(ErrorCode::InvalidArgument, "median window must be >= 1");
    if (window % 2 == 0) throw Error(ErrorCode::EvenWindow, "median window must be odd, got " + std::to_string(window));
    field.validate();
    if (window == 1) return field;

    const Index rows = field.axial.rows();
    const Index cols = field.axial.cols();
    const Index half = window / 2;
    DisplacementField out = field;
    std::vector<double> buf;
    buf.reserve(static_cast<std::size_t>(window * window));
    for (const auto& [src, dst] : {std::pair{&field.axial, &out.axial}, std::pair{&field.lateral, &out.lateral}}) {
        for (Index j = 0; j < cols; ++j) {
            for (Index i = 0; i < rows; ++i) {
                buf.clear();
                for (Index dj = -half; dj <= half; ++dj) {
                    for (Index di = -half; di <= half; ++di) {
                        const Index ii = std::clamp<Index>(i + di, 0, rows - 1);
                        const Index jj = std::clamp<Index>(j + dj, 0, cols - 1);
                        buf.push_back((*src)(ii, jj));
                    }
                }
                (*dst)(i, j) = median_of(buf);
            }
        }
    }
    return out;
}

}  // namespace elasto
