#include "elasto/glue.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "elasto/kernels.hpp"

namespace elasto {

void GlueParams::validate() const {
    const double w[] = {alpha_axial, alpha_lateral, beta_axial, beta_lateral};
    bool any_positive = false;
    for (const double v : w) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "weights must be finite and >= 0");
        any_positive = any_positive || v > 0.0;
    }
    if (!any_positive) throw Error(ErrorCode::InvalidArgument, "at least one regularisation weight must be > 0");
    if (outer_iterations < 1) throw Error(ErrorCode::InvalidArgument, "outer_iterations must be >= 1");
    if (!(solver_tolerance > 0.0 && solver_tolerance <= 1e-2)) {
        throw Error(ErrorCode::InvalidArgument, "solver_tolerance must lie in (0, 1e-2]");
    }
    if (solver_max_iters < 1) throw Error(ErrorCode::InvalidArgument, "solver_max_iters must be >= 1");
}

GlueParams GlueParams::scaled(double factor) const {
    GlueParams p = *this;
    p.alpha_axial *= factor;
    p.alpha_lateral *= factor;
    p.beta_axial *= factor;
    p.beta_lateral *= factor;
    return p;
}

namespace {

kernels::RegularizationWeights weights_of(const GlueParams& p) {
    return {p.alpha_axial, p.alpha_lateral, p.beta_axial, p.beta_lateral};
}

void check(const RfFrame& pre, const RfFrame& post, const DisplacementField& field) {
    if (pre.dims() != post.dims() || field.dims() != pre.dims()) {
        throw Error(ErrorCode::DimensionMismatch, "frames and displacement field differ in size");
    }
    field.validate();
}

double continuity(const Eigen::MatrixXd& x, double w_axial, double w_lateral) {
    const Index m = x.rows();
    const Index n = x.cols();
    double c = 0.0;
    if (w_axial != 0.0) c += w_axial * (x.bottomRows(m - 1) - x.topRows(m - 1)).squaredNorm();
    if (w_lateral != 0.0) c += w_lateral * (x.rightCols(n - 1) - x.leftCols(n - 1)).squaredNorm();
    return c;
}

DisplacementField deinterleave(const Eigen::VectorXd& v, GridDims dims) {
    DisplacementField f = DisplacementField::zeros(dims);
    for (Index j = 0; j < dims.cols; ++j) {
        for (Index i = 0; i < dims.rows; ++i) {
            f.axial(i, j) = v(unknown_index(i, j, dims.rows, 0));
            f.lateral(i, j) = v(unknown_index(i, j, dims.rows, 1));
        }
    }
    return f;
}

}  // namespace

double cost_value(const RfFrame& pre, const RfFrame& post, const DisplacementField& field, const GlueParams& params) {
    check(pre, post, field);
    const Eigen::MatrixXd a = pre.samples().cast<double>();
    const Eigen::MatrixXd b = post.samples().cast<double>();
    return kernels::data_cost(a, b, field) + continuity(field.axial, params.alpha_axial, params.alpha_lateral) +
           continuity(field.lateral, params.beta_axial, params.beta_lateral);
}

SparseSystem build_linear_system(const RfFrame& pre, const RfFrame& post, const DisplacementField& field,
                                 const GlueParams& params) {
    check(pre, post, field);
    SparseSystem system;
    kernels::assemble_system(pre.samples().cast<double>(), post.samples().cast<double>(), field, weights_of(params),
                             system);
    return system;
}

SolveResult solve_refinement(const SparseSystem& system, const GlueParams& params) {
    const PcgResult pcg = solve_pcg(system, {params.solver_tolerance, params.solver_max_iters});
    SolveResult out;
    out.increments = deinterleave(pcg.solution, system.grid);
    out.iterations = pcg.iterations;
    out.relative_residual = pcg.relative_residual;
    out.converged = pcg.converged;
    return out;
}

RefineResult glue_refine(const RfFrame& pre, const RfFrame& post, const DisplacementField& init,
                         const GlueParams& params) {
    params.validate();
    check(pre, post, init);
    const Eigen::MatrixXd a = pre.samples().cast<double>();
    const Eigen::MatrixXd b = post.samples().cast<double>();
    const auto weights = weights_of(params);
    const auto full_cost = [&](const DisplacementField& f) {
        return kernels::data_cost(a, b, f) + continuity(f.axial, weights.alpha_axial, weights.alpha_lateral) +
               continuity(f.lateral, weights.beta_axial, weights.beta_lateral);
    };

    RefineResult result;
    result.field = init;
    double cost = full_cost(result.field);
    for (int it = 1; it <= params.outer_iterations; ++it) {
        SparseSystem system;
        kernels::assemble_system(a, b, result.field, weights, system);
        const PcgResult pcg = solve_pcg(system, {params.solver_tolerance, params.solver_max_iters});

        IterationLog entry;
        entry.iteration = it;
        entry.cost_before = cost;
        entry.model_at_zero = cost;
        // Linearised cost = cost + 2 q(delta), q relative to zero increment.
        entry.model_at_solution = cost + 2.0 * quadratic_model(system, pcg.solution);
        entry.solver_iterations = pcg.iterations;
        entry.relative_residual = pcg.relative_residual;
        entry.converged = pcg.converged;

        const DisplacementField delta = deinterleave(pcg.solution, system.grid);
        result.field.axial += delta.axial;
        result.field.lateral += delta.lateral;
        cost = full_cost(result.field);
        entry.cost_after = cost;
        result.log.push_back(entry);
    }
    const double m = static_cast<double>(pre.rows());
    const double n = static_cast<double>(pre.cols());
    result.out_of_bounds = result.field.axial.cwiseAbs().maxCoeff() > m || result.field.lateral.cwiseAbs().maxCoeff() > n;
    return result;
}

void write_diagnostics(const std::vector<IterationLog>& log, std::ostream& out) {
    char buf[320];
    for (const auto& e : log) {
        const int len = std::snprintf(
            buf, sizeof(buf),
            "iteration=%d cost_before=%.10g cost_after=%.10g model_at_zero=%.10g model_at_solution=%.10g "
            "solver_iterations=%d relative_residual=%.3e converged=%s\n",
            e.iteration, e.cost_before, e.cost_after, e.model_at_zero, e.model_at_solution, e.solver_iterations,
            e.relative_residual, e.converged ? "true" : "false");
        out.write(buf, len);
    }
}

}  // namespace elasto
