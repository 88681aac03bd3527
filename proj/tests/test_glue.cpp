#include <doctest.h>

#include <sstream>

#include <Eigen/Cholesky>

#include "elasto/coarse_flow.hpp"
#include "elasto/glue.hpp"
#include "elasto/kernels.hpp"
#include "elasto/phantom.hpp"
#include "support.hpp"

using namespace elasto;

namespace {

RfFrame frame_of(const Eigen::MatrixXd& m) { return RfFrame(m.cast<float>(), FrameMetadata{}); }

GlueParams weights(double aa, double al, double ba, double bl) {
    GlueParams p;
    p.alpha_axial = aa;
    p.alpha_lateral = al;
    p.beta_axial = ba;
    p.beta_lateral = bl;
    return p;
}

// Random field whose warped positions stay strictly inside the frame and away
// from cell edges, so the bilinear cost is smooth around it.
DisplacementField interior_field(testing::Gen& g, Index m, Index n) {
    DisplacementField f = DisplacementField::zeros({m, n});
    const auto offset = [&](Index k, Index size) {
        double v = g.uniform(-0.45, 0.45);
        if (k == 0) v = g.uniform(0.05, 0.45);
        if (k == size - 1) v = g.uniform(-0.45, -0.05);
        if (std::abs(v) < 0.02) v = 0.1;
        return v;
    };
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < m; ++i) {
            f.axial(i, j) = offset(i, m);
            f.lateral(i, j) = offset(j, n);
        }
    return f;
}

double relative_error(const Eigen::VectorXd& x, const Eigen::VectorXd& ref) {
    return (x - ref).norm() / std::max(ref.norm(), 1e-300);
}

}  // namespace

TEST_CASE("cost: pre = post with zero field is zero") {
    testing::Gen g(41);
    const RfFrame a = frame_of(g.matrix(7, 5));
    CHECK(cost_value(a, a, DisplacementField::zeros({7, 5}), GlueParams{}) == 0.0);
}

TEST_CASE("cost: post shifted by an integer constant field matches only where nothing clamps") {
    // q(i + 2, j + 1) = p(i, j); samples that would read past the frame clamp.
    Eigen::MatrixXd p(6, 5), q(6, 5);
    for (Index j = 0; j < 5; ++j)
        for (Index i = 0; i < 6; ++i) {
            p(i, j) = std::sin(0.7 * i) + std::cos(1.3 * j);
            q(i, j) = std::sin(0.7 * (i - 2)) + std::cos(1.3 * (j - 1));
        }
    const RfFrame pre = frame_of(p), post = frame_of(q);
    const DisplacementField f = DisplacementField::constant({6, 5}, 2.0, 1.0);
    double interior = 0.0, clamped = 0.0;
    for (Index j = 0; j < 5; ++j)
        for (Index i = 0; i < 6; ++i) {
            const double r = pre.samples()(i, j) - double(post.samples()(std::min<Index>(i + 2, 5), std::min<Index>(j + 1, 4)));
            (i + 2 < 6 && j + 1 < 5 ? interior : clamped) += r * r;
        }
    CHECK(interior < 1e-10);
    CHECK(cost_value(pre, post, f, GlueParams{}) == doctest::Approx(interior + clamped).epsilon(1e-12));
}

TEST_CASE("cost: 3x3 hand cases") {
    Eigen::MatrixXd pre(3, 3);
    pre << 1, 2, 3, 4, 5, 6, 7, 8, 9;
    Eigen::MatrixXd post = pre;
    post(0, 1) = 0.0;
    post(1, 2) = 8.0;
    // Zero field: (2 - 0)^2 + (6 - 8)^2.
    CHECK(cost_value(frame_of(pre), frame_of(post), DisplacementField::zeros({3, 3}), GlueParams{}) == 8.0);

    // Half-sample axial shift on a linear ramp: rows 0 and 1 read 1.5 higher,
    // row 2 clamps to itself. 6 * 1.5^2 = 13.5; the constant field has no
    // continuity cost.
    CHECK(cost_value(frame_of(pre), frame_of(pre), DisplacementField::constant({3, 3}, 0.5, 0.0), GlueParams{}) ==
          doctest::Approx(13.5).epsilon(1e-12));
}

TEST_CASE("cost: continuity terms on flat frames") {
    const RfFrame flat = frame_of(Eigen::MatrixXd::Constant(2, 2, 3.0));
    DisplacementField f = DisplacementField::zeros({2, 2});
    f.axial << 0, 1, 2, 4;
    f.lateral << 1, 1, 1, 1;
    // Axial neighbours: (2-0)^2 + (4-1)^2 = 13; lateral: (1-0)^2 + (4-2)^2 = 5.
    CHECK(cost_value(flat, flat, f, weights(1, 10, 7, 7)) == doctest::Approx(13.0 + 50.0));
    f.lateral << 0, 1, 3, 3;
    // Lateral field: axial neighbours (3-0)^2 + (3-1)^2 = 13, lateral (1)^2 + 0 = 1.
    CHECK(cost_value(flat, flat, f, weights(0, 0, 2, 3)) == doctest::Approx(26.0 + 3.0));
    CHECK_THROWS_AS(cost_value(flat, flat, DisplacementField::zeros({3, 2}), GlueParams{}), Error);
}

TEST_CASE("system: 2x2 flat frames with alpha_axial only is the graph Laplacian") {
    const RfFrame flat = frame_of(Eigen::MatrixXd::Constant(2, 2, 1.0));
    const SparseSystem s = build_linear_system(flat, flat, DisplacementField::zeros({2, 2}), weights(1, 0, 0, 0));
    Eigen::MatrixXd want = Eigen::MatrixXd::Zero(8, 8);
    // Axial unknowns of (0,0), (1,0), (0,1), (1,1) sit at 0, 2, 4, 6.
    for (int pair : {0, 4}) {
        want(pair, pair) = 1;
        want(pair + 2, pair + 2) = 1;
        want(pair, pair + 2) = -1;
        want(pair + 2, pair) = -1;
    }
    CHECK(s.to_dense() == want);
    CHECK(s.rhs.isZero(0.0));
    CHECK(s.size() == 8);
}

TEST_CASE("system: exactly symmetric, at most 6 off-diagonals, positive definite") {
    testing::Gen g(43);
    for (int trial = 0; trial < 20; ++trial) {
        const Index m = g.index(3, 9), n = g.index(3, 7);
        const RfFrame a = frame_of(g.matrix(m, n)), b = frame_of(g.matrix(m, n));
        const GlueParams p = weights(g.uniform(0.1, 5), g.uniform(0.1, 5), g.uniform(0.1, 5), g.uniform(0.1, 5));
        const SparseSystem s = build_linear_system(a, b, g.field(m, n, 0.8), p);
        CHECK(s.is_symmetric());
        const Eigen::MatrixXd d = s.to_dense();
        CHECK((d - d.transpose()).cwiseAbs().maxCoeff() == 0.0);
        for (Index r = 0; r < s.size(); ++r) {
            const auto row_nnz = s.row_ptr[std::size_t(r + 1)] - s.row_ptr[std::size_t(r)];
            CHECK(row_nnz <= 7);
        }
        CHECK(Eigen::LLT<Eigen::MatrixXd>(d).info() == Eigen::Success);
    }
}

TEST_CASE("system: rhs is minus half the finite-difference gradient of the cost") {
    testing::Gen g(44);
    for (int trial = 0; trial < 10; ++trial) {
        const Index m = 8, n = 6;
        const RfFrame a = frame_of(g.matrix(m, n)), b = frame_of(g.matrix(m, n));
        const GlueParams p = weights(g.uniform(0.1, 5), g.uniform(0.1, 5), g.uniform(0.1, 5), g.uniform(0.1, 5));
        const DisplacementField f = interior_field(g, m, n);
        const SparseSystem s = build_linear_system(a, b, f, p);
        Eigen::VectorXd fd(s.size());
        const double h = 1e-6;
        for (Index j = 0; j < n; ++j)
            for (Index i = 0; i < m; ++i)
                for (int comp = 0; comp < 2; ++comp) {
                    DisplacementField up = f, down = f;
                    (comp == 0 ? up.axial : up.lateral)(i, j) += h;
                    (comp == 0 ? down.axial : down.lateral)(i, j) -= h;
                    const double grad = (cost_value(a, b, up, p) - cost_value(a, b, down, p)) / (2.0 * h);
                    fd(unknown_index(i, j, m, comp)) = -0.5 * grad;
                }
        CHECK(relative_error(s.rhs, fd) < 1e-4);
        CHECK((s.rhs - fd).cwiseAbs().maxCoeff() < 1e-4 * std::max(1.0, fd.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("solver: iterative solve matches a dense Cholesky solve") {
    testing::Gen g(45);
    for (int trial = 0; trial < 50; ++trial) {
        const RfFrame a = frame_of(g.matrix(6, 5)), b = frame_of(g.matrix(6, 5));
        GlueParams p = weights(g.uniform(0.05, 10), g.uniform(0.05, 10), g.uniform(0.05, 10), g.uniform(0.05, 10));
        p.solver_tolerance = 1e-13;
        const SparseSystem s = build_linear_system(a, b, g.field(6, 5, 0.7), p);
        const Eigen::LLT<Eigen::MatrixXd> llt(s.to_dense());
        REQUIRE(llt.info() == Eigen::Success);
        const Eigen::VectorXd dense = llt.solve(s.rhs);
        const PcgResult r = solve_pcg(s, {1e-13, 5000});
        CHECK(r.converged);
        CHECK(relative_error(r.solution, dense) < 1e-8);
        const SolveResult sr = solve_refinement(s, p);
        CHECK(sr.increments.axial(2, 3) == doctest::Approx(dense(unknown_index(2, 3, 6, 0))).epsilon(1e-8));
        CHECK(sr.increments.lateral(5, 4) == doctest::Approx(dense(unknown_index(5, 4, 6, 1))).epsilon(1e-8));
    }
}

TEST_CASE("solver: identity system, zero rhs, singular and non-convergent cases") {
    testing::Gen g(46);
    const Eigen::VectorXd r = g.matrix(12, 1);
    const SparseSystem id = SparseSystem::from_dense({2, 3}, Eigen::MatrixXd::Identity(12, 12), r);
    CHECK(relative_error(solve_pcg(id, {}).solution, r) < 1e-12);

    const RfFrame a = frame_of(g.matrix(5, 4)), b = frame_of(g.matrix(5, 4));
    SparseSystem s = build_linear_system(a, b, g.field(5, 4, 0.5), GlueParams{});
    s.rhs.setZero();
    const PcgResult zero = solve_pcg(s, {});
    CHECK(zero.solution.isZero(0.0));

    const RfFrame flat = frame_of(Eigen::MatrixXd::Constant(4, 4, 2.0));
    const SparseSystem singular = build_linear_system(flat, flat, DisplacementField::zeros({4, 4}), weights(0, 0, 0, 0));
    CHECK(singular.to_dense().isZero(0.0));
    SparseSystem nonzero_rhs = singular;
    nonzero_rhs.rhs.setOnes();
    try {
        solve_pcg(nonzero_rhs, {});
        FAIL("expected SingularSystem");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SingularSystem);
    }

    Eigen::MatrixXd indefinite = Eigen::MatrixXd::Identity(4, 4);
    indefinite(3, 3) = -1.0;
    CHECK_THROWS_AS(solve_pcg(SparseSystem::from_dense({2, 1}, indefinite, Eigen::VectorXd::Ones(4)), {}), Error);

    // One iteration on a coupled system cannot converge to 1e-12.
    const SparseSystem hard = build_linear_system(a, b, g.field(5, 4, 0.5), GlueParams{});
    const PcgResult capped = solve_pcg(hard, {1e-12, 1});
    CHECK_FALSE(capped.converged);
    CHECK(capped.iterations == 1);
    CHECK(std::isfinite(capped.relative_residual));
}

TEST_CASE("glue_refine: pre = post with zero init stays at zero") {
    const RfFrame a = render_rf(generate_scene(testing::small_scene(), 47), testing::small_acquisition(128, 16));
    const RefineResult r = glue_refine(a, a, DisplacementField::zeros(a.dims()), GlueParams{});
    CHECK(r.field.axial.cwiseAbs().maxCoeff() < 1e-8);
    CHECK(r.field.lateral.cwiseAbs().maxCoeff() < 1e-8);
    CHECK(r.log.size() == 2);
    CHECK_FALSE(r.out_of_bounds);
}

TEST_CASE("glue_refine: 1% phantom, model decreases and error drops below the coarse init") {
    const AcquisitionConfig acq = testing::small_acquisition(384, 48);
    const PhantomScene scene = generate_scene(testing::small_scene(), 48);
    const DeformedPair pair = deform_and_render(scene, deformation_for(scene, 0.01), acq);
    const RfFrame pre = render_rf(scene, acq);
    const DisplacementField init = estimate_coarse(pre, pair.post, CoarseParams{});
    const RefineResult r = glue_refine(pre, pair.post, init, GlueParams{});
    REQUIRE(r.log.size() == 2);
    for (const auto& e : r.log) {
        CHECK(e.model_at_solution <= e.model_at_zero);
        CHECK(e.converged);
    }
    const auto rmse = [&](const Eigen::MatrixXd& est) { return std::sqrt((est - pair.truth.axial).squaredNorm() / double(est.size())); };
    CHECK(rmse(r.field.axial) < rmse(init.axial));

    std::ostringstream log;
    write_diagnostics(r.log, log);
    CHECK(log.str().find("iteration") != std::string::npos);
}

TEST_CASE("glue_refine rejects bad params and mismatched sizes") {
    testing::Gen g(49);
    const RfFrame a = frame_of(g.matrix(6, 5));
    CHECK_THROWS_AS(glue_refine(a, a, DisplacementField::zeros({6, 5}), weights(0, 0, 0, 0)), Error);
    CHECK_THROWS_AS(glue_refine(a, a, DisplacementField::zeros({5, 5}), GlueParams{}), Error);
    GlueParams p;
    p.solver_tolerance = 0.5;
    CHECK_THROWS_AS(p.validate(), Error);
    p = {};
    p.outer_iterations = 0;
    CHECK_THROWS_AS(p.validate(), Error);
    p = {};
    p.beta_axial = -1.0;
    CHECK_THROWS_AS(p.validate(), Error);
    const GlueParams s = GlueParams{}.scaled(10.0);
    CHECK(s.alpha_axial == 50.0);
    CHECK(s.beta_lateral == 5.0);
}

TEST_CASE("assembly and data cost: parallel matches serial exactly") {
    testing::Gen g(50);
    const Eigen::MatrixXd a = g.matrix(40, 9), b = g.matrix(40, 9);
    const DisplacementField f = g.field(40, 9, 1.5);
    const kernels::RegularizationWeights w{1.0, 2.0, 3.0, 0.5};
    SparseSystem par, ser;
    kernels::assemble_system(a, b, f, w, par);
    kernels::serial::assemble_system(a, b, f, w, ser);
    CHECK(par.row_ptr == ser.row_ptr);
    CHECK(par.col_idx == ser.col_idx);
    CHECK(par.values == ser.values);
    CHECK(par.rhs == ser.rhs);
    CHECK(kernels::data_cost(a, b, f) == doctest::Approx(kernels::serial::data_cost(a, b, f)).epsilon(1e-14));
}

TEST_CASE("triplet dump lists every nonzero and rhs entry") {
    const SparseSystem s = SparseSystem::from_dense({1, 1}, (Eigen::MatrixXd(2, 2) << 2, -1, -1, 3).finished(),
                                                    Eigen::Vector2d(0.5, -1.0));
    std::ostringstream out;
    write_triplets(s, out);
    const std::string text = out.str();
    std::istringstream in(text);
    std::string line;
    int a_lines = 0, b_lines = 0;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.rfind("A ", 0) == 0) ++a_lines;
        if (line.rfind("b ", 0) == 0) ++b_lines;
    }
    CHECK(a_lines == 4);
    CHECK(b_lines == 2);
    CHECK(text.find("A 0 1 -1") != std::string::npos);
    CHECK(text.find("b 1 -1") != std::string::npos);
}
