#pragma once

// Data-parallel inner loops. Every kernel has an OpenMP version in
// elasto::kernels and a plain serial version in elasto::kernels::serial that
// the tests use as the reference. Parallel versions are deterministic for any
// thread count: each output element is produced by exactly one iteration in a
// fixed order, and reductions go through fixed-size chunks summed in order.

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "elasto/phantom.hpp"
#include "elasto/rf_core.hpp"
#include "elasto/sparse.hpp"

namespace elasto::kernels {

// ---------------------------------------------------------------- rendering

struct RenderGeometry {
    Index rows = 0;
    Index cols = 0;
    double start_depth_mm = 0.0;
    double axial_spacing_mm = 0.0;
    double lateral_origin_mm = 0.0;
    double lateral_pitch_mm = 0.0;
    double wavenumber = 0.0;  // radians per mm of depth offset, 4 pi fc / c
    double sigma_axial_mm = 0.0;
    double sigma_lateral_mm = 0.0;
    double truncation = 4.0;
};

/// `scatterers` must be sorted by lateral position. Fills `out` (rows x cols).
void render_lines(std::span<const Scatterer> scatterers, const RenderGeometry& geom,
                  Eigen::MatrixXf& out);

// ---------------------------------------------------------- block matching

struct BlockTask {
    Index row0 = 0;  // top-left of the pre-frame block
    Index col0 = 0;
    Index predicted_axial = 0;  // integer lag the search is centred on
    Index predicted_lateral = 0;
    Index search_axial = 0;
    Index search_lateral = 0;
};

struct BlockMatch {
    double axial = 0.0;  // sub-sample lag of the NCC peak
    double lateral = 0.0;
    double peak = -1.0;  // NCC at the integer peak; -1 when no lag was admissible
};

/// Normalised cross-correlation of a block against the post frame at lag
/// (da, dl). Returns nullopt when the displaced block leaves the frame; 0 when
/// either block has zero variance.
std::optional<double> block_ncc(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& post, Index row0,
                                Index col0, Index block_rows, Index block_cols, Index da, Index dl);

void match_blocks(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& post, Index block_rows,
                  Index block_cols, std::span<const BlockTask> tasks, std::span<BlockMatch> out);

// ------------------------------------------------------- warped data term

struct WarpSample {
    double residual = 0.0;  // I1(i, j) - I2(i + a, j + l)
    double grad_axial = 0.0;
    double grad_lateral = 0.0;
};

/// Bilinear sample of `post` at (i + a, j + l), clamped to the frame, with the
/// symmetric derivative of the bilinear interpolant along each axis (zero in
/// any axis where the position was clamped).
WarpSample warp_sample(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& post, Index i, Index j,
                       double a, double l);

struct RegularizationWeights {
    double alpha_axial = 0.0;
    double alpha_lateral = 0.0;
    double beta_axial = 0.0;
    double beta_lateral = 0.0;
};

/// Assembles the linearised normal equations at `field` into `system`.
void assemble_system(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& post,
                     const DisplacementField& field, const RegularizationWeights& weights,
                     SparseSystem& system);

/// Sum of squared data residuals over the grid.
double data_cost(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& post, const DisplacementField& field);

// ------------------------------------------------------------- linear algebra

void spmv(const SparseSystem& system, const Eigen::VectorXd& x, Eigen::VectorXd& y);
double dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// ---------------------------------------------------------------- filtering

/// Axial convolution with `axial`, then lateral convolution with `lateral`.
/// Both kernels have odd length and are centred; borders are replicated.
void separable_filter(const Eigen::MatrixXf& in, std::span<const double> axial, std::span<const double> lateral,
                      Eigen::MatrixXf& out);

// ------------------------------------------------------------------- strain

/// OLS slope of each column over a centred window of `window_len` rows,
/// shrunk at the edges to stay in range (never fewer than 3 points).
void lsq_slope_columns(const Eigen::MatrixXd& values, int window_len, Eigen::MatrixXd& out);

// ---------------------------------------------------------------------- SSIM

struct SsimConstants {
    Index window = 8;
    double c1 = 0.0;
    double c2 = 0.0;
};

/// Sum of SSIM over all window positions (uniform window weighting).
double ssim_sum(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const SsimConstants& k);

namespace serial {

void render_lines(std::span<const Scatterer> scatterers, const RenderGeometry& geom,
                  Eigen::MatrixXf& out);
void match_blocks(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& post, Index block_rows,
                  Index block_cols, std::span<const BlockTask> tasks, std::span<BlockMatch> out);
void assemble_system(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& post,
                     const DisplacementField& field, const RegularizationWeights& weights,
                     SparseSystem& system);
double data_cost(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& post, const DisplacementField& field);
void spmv(const SparseSystem& system, const Eigen::VectorXd& x, Eigen::VectorXd& y);
double dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
void separable_filter(const Eigen::MatrixXf& in, std::span<const double> axial, std::span<const double> lateral,
                      Eigen::MatrixXf& out);
void lsq_slope_columns(const Eigen::MatrixXd& values, int window_len, Eigen::MatrixXd& out);
double ssim_sum(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const SsimConstants& k);

}  // namespace serial

}  // namespace elasto::kernels
