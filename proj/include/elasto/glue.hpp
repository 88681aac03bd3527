#pragma once

#include <iosfwd>
#include <vector>

#include "elasto/rf_core.hpp"
#include "elasto/sparse.hpp"

namespace elasto {

/// Weights of the first-order continuity terms and solver controls.
/// alpha_* regularise the axial field, beta_* the lateral one; the suffix names
/// the grid direction of the neighbour difference.
struct GlueParams {
    double alpha_axial = 5.0;
    double alpha_lateral = 1.0;
    double beta_axial = 10.0;
    double beta_lateral = 0.5;
    int outer_iterations = 2;
    double solver_tolerance = 1e-5;
    int solver_max_iters = 5000;

    void validate() const;
    GlueParams scaled(double factor) const;
};

/// Data mismatch plus continuity penalties of `field`.
double cost_value(const RfFrame& pre, const RfFrame& post, const DisplacementField& field, const GlueParams& params);

/// Normal equations of the cost linearised about `field` in the increments.
/// The rhs equals minus half the gradient of cost_value at `field`.
SparseSystem build_linear_system(const RfFrame& pre, const RfFrame& post, const DisplacementField& field,
                                 const GlueParams& params);

struct SolveResult {
    DisplacementField increments;
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;  // false: NoConvergence, increments hold the best iterate
};

SolveResult solve_refinement(const SparseSystem& system, const GlueParams& params);

struct IterationLog {
    int iteration = 0;
    double cost_before = 0.0;
    double cost_after = 0.0;
    double model_at_zero = 0.0;      // linearised cost at zero increment
    double model_at_solution = 0.0;  // linearised cost at the returned increment
    int solver_iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

struct RefineResult {
    DisplacementField field;
    std::vector<IterationLog> log;
    bool out_of_bounds = false;  // some |axial| > rows or |lateral| > cols after refinement
};

RefineResult glue_refine(const RfFrame& pre, const RfFrame& post, const DisplacementField& init,
                         const GlueParams& params);

void write_diagnostics(const std::vector<IterationLog>& log, std::ostream& out);

}  // namespace elasto
