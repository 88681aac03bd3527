// Serial vs OpenMP versions of every kernel on pipeline-sized inputs
// (1024 x 128 frames). Run with OMP_NUM_THREADS to vary the thread count.

#include <algorithm>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "elasto/glue.hpp"
#include "elasto/kernels.hpp"
#include "elasto/phantom.hpp"
#include "elasto/preprocess.hpp"

using namespace elasto;

namespace {

constexpr Index kRows = 1024, kCols = 128;

Eigen::MatrixXd random_matrix(Index rows, Index cols, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    Eigen::MatrixXd m(rows, cols);
    for (Index k = 0; k < m.size(); ++k) m.data()[k] = n(rng);
    return m;
}

DisplacementField small_field(unsigned seed) {
    DisplacementField f = DisplacementField::zeros({kRows, kCols});
    f.axial = 0.3 * random_matrix(kRows, kCols, seed);
    f.lateral = 0.1 * random_matrix(kRows, kCols, seed + 1);
    return f;
}

struct RenderInput {
    std::vector<Scatterer> scatterers;
    kernels::RenderGeometry geom;
};

const RenderInput& render_input() {
    static const RenderInput in = [] {
        AcquisitionConfig acq;
        SceneConfig cfg;
        const PhantomScene scene = generate_scene(cfg, 1);
        RenderInput r;
        r.scatterers = scene.scatterers;
        std::stable_sort(r.scatterers.begin(), r.scatterers.end(),
                         [](const Scatterer& a, const Scatterer& b) { return a.lateral_mm < b.lateral_mm; });
        r.geom.rows = acq.samples;
        r.geom.cols = acq.lines;
        r.geom.start_depth_mm = axial_origin(acq, cfg.depth_mm);
        r.geom.axial_spacing_mm = acq.axial_spacing_mm();
        r.geom.lateral_origin_mm = lateral_origin(acq, cfg.width_mm);
        r.geom.lateral_pitch_mm = acq.lateral_pitch_mm;
        r.geom.wavenumber = 4.0 * 3.141592653589793 * acq.center_frequency / (acq.sound_speed * 1e3);
        r.geom.sigma_axial_mm = acq.sigma_axial_mm;
        r.geom.sigma_lateral_mm = acq.sigma_lateral_mm;
        r.geom.truncation = acq.psf_truncation;
        return r;
    }();
    return in;
}

template <bool Parallel>
void BM_render(benchmark::State& state) {
    const RenderInput& in = render_input();
    Eigen::MatrixXf out;
    for (auto _ : state) {
        if constexpr (Parallel) kernels::render_lines(in.scatterers, in.geom, out);
        else kernels::serial::render_lines(in.scatterers, in.geom, out);
        benchmark::DoNotOptimize(out.data());
    }
}

template <bool Parallel>
void BM_match_blocks(benchmark::State& state) {
    const Eigen::MatrixXd pre = random_matrix(kRows, kCols, 1), post = random_matrix(kRows, kCols, 2);
    std::vector<kernels::BlockTask> tasks;
    for (Index r = 0; r + 64 <= kRows; r += 32)
        for (Index c = 0; c + 8 <= kCols; c += 4) tasks.push_back({r, c, 0, 0, 16, 4});
    std::vector<kernels::BlockMatch> out(tasks.size());
    for (auto _ : state) {
        if constexpr (Parallel) kernels::match_blocks(pre, post, 64, 8, tasks, out);
        else kernels::serial::match_blocks(pre, post, 64, 8, tasks, out);
        benchmark::DoNotOptimize(out.data());
    }
}

template <bool Parallel>
void BM_assemble(benchmark::State& state) {
    const Eigen::MatrixXd pre = random_matrix(kRows, kCols, 3), post = random_matrix(kRows, kCols, 4);
    const DisplacementField f = small_field(5);
    const kernels::RegularizationWeights w{5.0, 0.3, 10.0, 0.5};
    SparseSystem s;
    for (auto _ : state) {
        if constexpr (Parallel) kernels::assemble_system(pre, post, f, w, s);
        else kernels::serial::assemble_system(pre, post, f, w, s);
        benchmark::DoNotOptimize(s.rhs.data());
    }
}

template <bool Parallel>
void BM_data_cost(benchmark::State& state) {
    const Eigen::MatrixXd pre = random_matrix(kRows, kCols, 6), post = random_matrix(kRows, kCols, 7);
    const DisplacementField f = small_field(8);
    for (auto _ : state) {
        if constexpr (Parallel) benchmark::DoNotOptimize(kernels::data_cost(pre, post, f));
        else benchmark::DoNotOptimize(kernels::serial::data_cost(pre, post, f));
    }
}

const SparseSystem& bench_system() {
    static const SparseSystem s = [] {
        SparseSystem sys;
        kernels::serial::assemble_system(random_matrix(kRows, kCols, 9), random_matrix(kRows, kCols, 10),
                                         small_field(11), {5.0, 0.3, 10.0, 0.5}, sys);
        return sys;
    }();
    return s;
}

template <bool Parallel>
void BM_spmv(benchmark::State& state) {
    const SparseSystem& s = bench_system();
    const Eigen::VectorXd x = random_matrix(s.size(), 1, 12);
    Eigen::VectorXd y(s.size());
    for (auto _ : state) {
        if constexpr (Parallel) kernels::spmv(s, x, y);
        else kernels::serial::spmv(s, x, y);
        benchmark::DoNotOptimize(y.data());
    }
}

template <bool Parallel>
void BM_dot(benchmark::State& state) {
    const Eigen::VectorXd a = random_matrix(2 * kRows * kCols, 1, 13), b = random_matrix(2 * kRows * kCols, 1, 14);
    for (auto _ : state) {
        if constexpr (Parallel) benchmark::DoNotOptimize(kernels::dot(a, b));
        else benchmark::DoNotOptimize(kernels::serial::dot(a, b));
    }
}

template <bool Parallel>
void BM_filter(benchmark::State& state) {
    const Eigen::MatrixXf in = random_matrix(kRows, kCols, 15).cast<float>();
    const std::vector<double> axial = gabor_taps(AcquisitionConfig{}.metadata(), 0.6);
    const std::vector<double> lateral = gaussian_taps(2.0);
    Eigen::MatrixXf out;
    for (auto _ : state) {
        if constexpr (Parallel) kernels::separable_filter(in, axial, lateral, out);
        else kernels::serial::separable_filter(in, axial, lateral, out);
        benchmark::DoNotOptimize(out.data());
    }
}

template <bool Parallel>
void BM_strain(benchmark::State& state) {
    const Eigen::MatrixXd v = random_matrix(kRows, kCols, 16);
    Eigen::MatrixXd out;
    for (auto _ : state) {
        if constexpr (Parallel) kernels::lsq_slope_columns(v, 251, out);
        else kernels::serial::lsq_slope_columns(v, 251, out);
        benchmark::DoNotOptimize(out.data());
    }
}

template <bool Parallel>
void BM_ssim(benchmark::State& state) {
    const Eigen::MatrixXd a = random_matrix(kRows, kCols, 17), b = random_matrix(kRows, kCols, 18);
    const kernels::SsimConstants k{8, 1e-4, 9e-4};
    for (auto _ : state) {
        if constexpr (Parallel) benchmark::DoNotOptimize(kernels::ssim_sum(a, b, k));
        else benchmark::DoNotOptimize(kernels::serial::ssim_sum(a, b, k));
    }
}

}  // namespace

#define ELASTO_BENCH_PAIR(name)                                                  \
    BENCHMARK_TEMPLATE(name, false)->Name(#name "/serial")->Unit(benchmark::kMillisecond); \
    BENCHMARK_TEMPLATE(name, true)->Name(#name "/openmp")->Unit(benchmark::kMillisecond)

ELASTO_BENCH_PAIR(BM_render);
ELASTO_BENCH_PAIR(BM_match_blocks);
ELASTO_BENCH_PAIR(BM_assemble);
ELASTO_BENCH_PAIR(BM_data_cost);
ELASTO_BENCH_PAIR(BM_spmv);
ELASTO_BENCH_PAIR(BM_dot);
ELASTO_BENCH_PAIR(BM_filter);
ELASTO_BENCH_PAIR(BM_strain);
ELASTO_BENCH_PAIR(BM_ssim);

BENCHMARK_MAIN();
