#include <doctest.h>

#include <cmath>
#include <limits>

#include "elasto/kernels.hpp"
#include "elasto/metrics.hpp"
#include "elasto/phantom.hpp"
#include "support.hpp"

using namespace elasto;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Fills `r` with lo/hi in a checkerboard, giving mean (lo + hi) / 2 and
// population std |hi - lo| / 2 on an even-sized rectangle.
void alternate(Eigen::MatrixXd& img, const Rect& r, double lo, double hi) {
    for (Index j = 0; j < r.cols; ++j)
        for (Index i = 0; i < r.rows; ++i) img(r.row0 + i, r.col0 + j) = (i + j) % 2 ? hi : lo;
}

const RegionSpec kRegions{{2, 2, 4, 4}, {2, 10, 4, 4}};

}  // namespace

TEST_CASE("cnr_e hand case is exactly 5") {
    Eigen::MatrixXd img = Eigen::MatrixXd::Zero(8, 16);
    alternate(img, kRegions.background, 9.0, 11.0);
    alternate(img, kRegions.target, 4.0, 6.0);
    CHECK(std::abs(cnr_e(img, kRegions) - 5.0) <= 1e-12);

    alternate(img, kRegions.background, 0.009, 0.011);
    alternate(img, kRegions.target, 0.004, 0.006);
    CHECK(std::abs(cnr_e(img, kRegions) - 5.0) <= 1e-12);
}

TEST_CASE("cnr_e: identical regions give 0, constant regions give +inf") {
    testing::Gen g(71);
    Eigen::MatrixXd img = g.matrix(8, 16);
    img.block(2, 2, 4, 4) = img.block(2, 10, 4, 4);
    CHECK(cnr_e(img, kRegions) == 0.0);

    Eigen::MatrixXd flat = Eigen::MatrixXd::Zero(8, 16);
    flat.block(2, 2, 4, 4).setConstant(1.0);
    flat.block(2, 10, 4, 4).setConstant(2.0);
    CHECK(cnr_e(flat, kRegions) == kInf);
}

TEST_CASE("snr_e: mean over population std, +inf for a constant window") {
    Eigen::MatrixXd img = Eigen::MatrixXd::Zero(8, 16);
    alternate(img, kRegions.background, 0.009, 0.011);
    CHECK(snr_e(img, kRegions.background) == doctest::Approx(10.0).epsilon(1e-12));
    img.block(2, 2, 4, 4).setConstant(0.02);
    CHECK(snr_e(img, kRegions.target) == kInf);
}

TEST_CASE("snr_e and cnr_e: scale invariance, cnr_e shift invariance") {
    testing::Gen g(72);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd img = g.matrix(8, 16);
        const double k = g.uniform(0.01, 100.0), c = g.uniform(-5, 5);
        CHECK(snr_e(k * img, kRegions.target) == doctest::Approx(snr_e(img, kRegions.target)).epsilon(1e-10));
        CHECK(cnr_e(k * img, kRegions) == doctest::Approx(cnr_e(img, kRegions)).epsilon(1e-10));
        CHECK(cnr_e((img.array() + c).matrix(), kRegions) == doctest::Approx(cnr_e(img, kRegions)).epsilon(1e-8));
    }
}

TEST_CASE("region validation: bounds, overlap, minimum size") {
    const GridDims dims{8, 16};
    CHECK_NOTHROW(kRegions.validate(dims));
    CHECK_THROWS_AS((RegionSpec{{2, 2, 4, 4}, {4, 4, 4, 4}}.validate(dims)), Error);
    CHECK_THROWS_AS((RegionSpec{{2, 2, 4, 4}, {6, 10, 4, 4}}.validate(dims)), Error);
    CHECK_THROWS_AS((RegionSpec{{2, 2, 3, 4}, {2, 10, 4, 4}}.validate(dims)), Error);
    CHECK_THROWS_AS(snr_e(Eigen::MatrixXd::Ones(8, 16), Rect{0, 14, 4, 4}), Error);
    CHECK(Rect{0, 0, 4, 4}.overlaps(Rect{3, 3, 2, 2}));
    CHECK_FALSE(Rect{0, 0, 4, 4}.overlaps(Rect{4, 0, 2, 2}));
}

TEST_CASE("mssim: identity, negation, constant windows") {
    testing::Gen g(73);
    const Eigen::MatrixXd a = g.matrix(20, 17);
    CHECK(mssim(a, a) == 1.0);
    CHECK(mssim(a, -a) < 1.0);

    MssimParams p;
    p.dynamic_range = 2.0;
    const double c1 = 0.0004;
    CHECK(mssim(Eigen::MatrixXd::Ones(8, 8), Eigen::MatrixXd::Constant(8, 8, 2.0), p) ==
          doctest::Approx((4.0 + c1) / (5.0 + c1)).epsilon(1e-14));
    CHECK(mssim(Eigen::MatrixXd::Ones(8, 8), Eigen::MatrixXd::Constant(8, 8, 2.0), p) ==
          doctest::Approx(0.8001).epsilon(1e-4));
    CHECK_THROWS_AS(mssim(a, g.matrix(20, 16)), Error);
    CHECK_THROWS_AS(mssim(g.matrix(5, 5), g.matrix(5, 5)), Error);
}

TEST_CASE("mssim: symmetric with a fixed range, within (-1, 1], 1 only for identical images") {
    testing::Gen g(74);
    for (int trial = 0; trial < 25; ++trial) {
        const Index m = g.index(8, 30), n = g.index(8, 30);
        const Eigen::MatrixXd a = g.matrix(m, n), b = g.matrix(m, n);
        MssimParams p;
        p.dynamic_range = g.uniform(0.5, 5.0);
        const double ab = mssim(a, b, p);
        CHECK(ab == doctest::Approx(mssim(b, a, p)).epsilon(1e-12));
        CHECK(ab > -1.0);
        CHECK(ab <= 1.0);
        Eigen::MatrixXd c = a;
        c(g.index(0, m - 1), g.index(0, n - 1)) += 0.5;
        CHECK(mssim(a, c, p) < 1.0 - 1e-12);
    }
}

TEST_CASE("mssim: parallel window sum matches the serial one") {
    testing::Gen g(75);
    const Eigen::MatrixXd a = g.matrix(60, 23), b = g.matrix(60, 23);
    const kernels::SsimConstants k{8, 1e-4, 9e-4};
    CHECK(kernels::ssim_sum(a, b, k) == doctest::Approx(kernels::serial::ssim_sum(a, b, k)).epsilon(1e-13));
}

TEST_CASE("psnr: 20 dB hand case, +inf for identical input, monotone in noise") {
    Eigen::MatrixXd ref(4, 4), noise(4, 4);
    for (Index j = 0; j < 4; ++j)
        for (Index i = 0; i < 4; ++i) {
            ref(i, j) = (i + j) % 2 ? 1.0 : -1.0;
            noise(i, j) = (i * 3 + j) % 2 ? 0.1 : -0.1;
        }
    CHECK(psnr(ref, ref + noise) == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(psnr(ref, ref) == kInf);
    CHECK_THROWS_AS(psnr(ref, Eigen::MatrixXd::Zero(3, 4)), Error);

    testing::Gen g(76);
    const Eigen::MatrixXd a = g.matrix(32, 32), n = g.matrix(32, 32);
    double last = kInf;
    for (double s : {0.01, 0.03, 0.1, 0.3, 1.0, 3.0}) {
        const double v = psnr(a, a + s * n);
        CHECK(v < last);
        last = v;
    }
}

TEST_CASE("psnr round trip with add_noise at 12.7 dB") {
    const RfFrame clean = render_rf(generate_scene(testing::small_scene(), 77), testing::small_acquisition());
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const RfFrame noisy = add_noise(clean, 12.7, seed);
        const double v = psnr(clean.samples().cast<double>(), noisy.samples().cast<double>());
        CHECK(std::abs(v - 12.7) <= 0.1);
    }
}
