#include <doctest.h>

#include <omp.h>

#include "elasto/kernels.hpp"
#include "elasto/phantom.hpp"
#include "support.hpp"

using namespace elasto;

namespace {

// Runs `f` with 1 and with 4 threads and returns both results.
template <class F>
auto with_threads(F&& f) {
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    auto one = f();
    omp_set_num_threads(4);
    auto four = f();
    omp_set_num_threads(saved);
    return std::make_pair(one, four);
}

SparseSystem random_system(testing::Gen& g, Index m, Index n) {
    SparseSystem s;
    kernels::assemble_system(g.matrix(m, n), g.matrix(m, n), g.field(m, n, 0.8), {1.0, 0.5, 2.0, 0.25}, s);
    return s;
}

}  // namespace

TEST_CASE("render: parallel equals serial and is thread-count independent") {
    const AcquisitionConfig acq = testing::small_acquisition(160, 20);
    PhantomScene scene = generate_scene(testing::small_scene(), 91);
    const RfFrame f = render_rf(scene, acq);
    const auto [one, four] = with_threads([&] { return render_rf(scene, acq).samples(); });
    CHECK(one == four);
    CHECK(one == f.samples());
}

TEST_CASE("spmv and dot: parallel equals serial, reductions are thread-count independent") {
    testing::Gen g(92);
    const SparseSystem s = random_system(g, 70, 40);  // 5600 unknowns: more than one dot chunk
    const Eigen::VectorXd x = g.matrix(s.size(), 1), y = g.matrix(s.size(), 1);
    Eigen::VectorXd par, ser;
    kernels::spmv(s, x, par);
    kernels::serial::spmv(s, x, ser);
    CHECK(par == ser);
    CHECK((par - s.to_dense() * x).cwiseAbs().maxCoeff() < 1e-10);
    const auto [d1, d4] = with_threads([&] { return kernels::dot(x, y); });
    CHECK(d1 == d4);
    CHECK(d1 == doctest::Approx(kernels::serial::dot(x, y)).epsilon(1e-12));
}

TEST_CASE("separable filter: parallel equals serial; delta input reproduces the kernels") {
    testing::Gen g(93);
    const Eigen::MatrixXf in = g.matrix(90, 17).cast<float>();
    const std::vector<double> ax{0.25, 0.5, 0.25}, lat{-0.1, 0.3, 1.0, 0.3, -0.1};
    Eigen::MatrixXf par, ser;
    kernels::separable_filter(in, ax, lat, par);
    kernels::serial::separable_filter(in, ax, lat, ser);
    CHECK(par == ser);

    Eigen::MatrixXf delta = Eigen::MatrixXf::Zero(9, 9);
    delta(4, 4) = 1.0f;
    Eigen::MatrixXf out;
    kernels::separable_filter(delta, ax, lat, out);
    for (int di = -1; di <= 1; ++di)
        for (int dj = -2; dj <= 2; ++dj)
            CHECK(out(4 + di, 4 + dj) == doctest::Approx(ax[std::size_t(di + 1)] * lat[std::size_t(dj + 2)]));
    CHECK(out(0, 0) == 0.0f);

    // Replicated borders: a constant image stays constant under a unit-sum kernel.
    kernels::separable_filter(Eigen::MatrixXf::Constant(6, 6, 2.0f), ax, std::vector<double>{1.0}, out);
    CHECK((out.array() - 2.0f).abs().maxCoeff() < 1e-6f);
}

TEST_CASE("every kernel gives identical output on 1 and 4 threads") {
    testing::Gen g(94);
    const Eigen::MatrixXd a = g.matrix(120, 24), b = g.matrix(120, 24);
    const DisplacementField f = g.field(120, 24, 1.2);

    const auto [s1, s4] = with_threads([&] {
        SparseSystem s;
        kernels::assemble_system(a, b, f, {1.0, 2.0, 3.0, 4.0}, s);
        return s.values;
    });
    CHECK(s1 == s4);

    const auto [c1, c4] = with_threads([&] { return kernels::data_cost(a, b, f); });
    CHECK(c1 == c4);

    std::vector<kernels::BlockTask> tasks;
    for (Index r = 8; r < 90; r += 9)
        for (Index c = 2; c < 16; c += 4) tasks.push_back({r, c, 0, 0, 6, 2});
    const auto [m1, m4] = with_threads([&] {
        std::vector<kernels::BlockMatch> out(tasks.size());
        kernels::match_blocks(a, b, 16, 6, tasks, out);
        std::vector<double> flat;
        for (const auto& m : out) flat.insert(flat.end(), {m.axial, m.lateral, m.peak});
        return flat;
    });
    CHECK(m1 == m4);

    const auto [l1, l4] = with_threads([&] {
        Eigen::MatrixXd out;
        kernels::lsq_slope_columns(a, 21, out);
        return out;
    });
    CHECK(l1 == l4);

    const auto [q1, q4] = with_threads([&] { return kernels::ssim_sum(a, b, {8, 1e-4, 9e-4}); });
    CHECK(q1 == q4);
}

TEST_CASE("warp sample: grid points, interior derivative, clamping") {
    Eigen::MatrixXd post(4, 3);
    for (Index j = 0; j < 3; ++j)
        for (Index i = 0; i < 4; ++i) post(i, j) = 2.0 * double(i) + 10.0 * double(j);
    const Eigen::MatrixXd pre = Eigen::MatrixXd::Zero(4, 3);
    const auto w = kernels::warp_sample(pre, post, 1, 1, 0.5, 0.25);
    CHECK(w.residual == doctest::Approx(-(3.0 + 12.5)));
    CHECK(w.grad_axial == doctest::Approx(2.0));
    CHECK(w.grad_lateral == doctest::Approx(10.0));
    const auto on_grid = kernels::warp_sample(pre, post, 1, 1, 0.0, 0.0);
    CHECK(on_grid.grad_axial == doctest::Approx(2.0));
    const auto clamped = kernels::warp_sample(pre, post, 3, 2, 5.0, 3.0);
    CHECK(clamped.residual == doctest::Approx(-post(3, 2)));
    CHECK(clamped.grad_axial == 0.0);
    CHECK(clamped.grad_lateral == 0.0);
}
