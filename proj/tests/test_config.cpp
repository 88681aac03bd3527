#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "elasto/config.hpp"
#include "support.hpp"

using namespace elasto;

namespace {

std::string config_error(const std::string& text, const std::vector<std::string>& overrides = {}) {
    try {
        parse_config(text, "cfg.yaml", overrides);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Config);
        return e.what();
    }
    FAIL("expected a config error");
    return {};
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("empty text gives the documented defaults") {
    const PipelineConfig c = parse_config("", "empty");
    CHECK(c.phantom.acquisition.samples == 1024);
    CHECK(c.phantom.acquisition.lines == 128);
    CHECK(c.phantom.scene_seed == 1);
    CHECK(c.phantom.noise_seed == 2);
    CHECK(std::isinf(c.phantom.psnr_db));
    CHECK(c.coarse.levels == 3);
    CHECK(c.glue.alpha_axial == 5.0);
    CHECK(c.glue.beta_axial == 10.0);
    CHECK(c.glue.outer_iterations == 2);
    CHECK(c.strain.params.compression_positive);
    CHECK(c.metrics.mssim.window == 8);
    CHECK(c.metrics.sweep.empty());
    CHECK_FALSE(c.external_flow);
    CHECK(c.output == "out");
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("values from YAML land in the right fields") {
    const PipelineConfig c = parse_config(R"(
phantom:
  scene:
    depth_mm: 30
    inclusion: null
  deformation: {applied_strain: 0.03}
  acquisition: {samples: 512, lines: 64}
  noise: {psnr_db: 12.7}
  seeds: {scene: 11, noise: 12}
coarse:
  block: [32, 6]
glue:
  alpha_lateral: 2.5
strain:
  window_len: 31
metrics:
  target: {row0: 10, col0: 10, rows: 8, cols: 8}
  sweep: [0.01, 0.02]
output: results
)",
                                          "inline");
    CHECK(c.phantom.scene.depth_mm == 30.0);
    CHECK_FALSE(c.phantom.scene.inclusion);
    CHECK(c.phantom.applied_strain == 0.03);
    CHECK(c.phantom.acquisition.samples == 512);
    CHECK(c.phantom.psnr_db == 12.7);
    CHECK(c.phantom.scene_seed == 11);
    CHECK(c.coarse.block.axial == 32);
    CHECK(c.coarse.block.lateral == 6);
    CHECK(c.glue.alpha_lateral == 2.5);
    CHECK(c.strain.params.window_len == 31);
    REQUIRE(c.metrics.target);
    CHECK(c.metrics.target->rows == 8);
    CHECK(c.metrics.sweep == std::vector<double>{0.01, 0.02});
    CHECK(c.output == "results");
}

TEST_CASE("unknown keys are rejected with their location") {
    const std::string msg = config_error("glue:\n  alpha_axial: 1\n  alhpa_lateral: 2\n");
    CHECK(contains(msg, "alhpa_lateral"));
    CHECK(contains(msg, "cfg.yaml:3:"));
    CHECK(contains(config_error("bogus: 1\n"), "bogus"));
}

TEST_CASE("wrong types and out-of-range values are config errors") {
    CHECK(contains(config_error("coarse:\n  levels: three\n"), "levels"));
    CHECK(contains(config_error("phantom:\n  seeds: {scene: -1}\n"), "scene"));
    config_error("strain:\n  window_len: 42\n");
    config_error("glue:\n  solver_tolerance: 0.5\n");
    config_error("metrics:\n  sweep: [0.01, 0.5]\n");
    config_error("coarse:\n  block: [64]\n");
    config_error("phantom:\n  acquisition: {samples: 100}\n");  // window 251 > samples
    config_error("glue: [1, 2]\n");
    config_error("a: [unclosed\n");
}

TEST_CASE("--set overrides are applied and checked like file keys") {
    const PipelineConfig c =
        parse_config("glue:\n  alpha_axial: 1\n", "cfg.yaml", {"glue.alpha_axial=7", "phantom.noise.psnr_db=20", "metrics.sweep=[0.01]"});
    CHECK(c.glue.alpha_axial == 7.0);
    CHECK(c.phantom.psnr_db == 20.0);
    CHECK(c.metrics.sweep == std::vector<double>{0.01});
    CHECK(parse_config("", "x", {"phantom.scene.inclusion=null"}).phantom.scene.inclusion == std::nullopt);

    CHECK(contains(config_error("", {"glue.nope=1"}), "glue.nope"));
    CHECK(contains(config_error("", {"glue.alpha_axial=abc"}), "--set"));
    config_error("", {"no_equals_sign"});
}

TEST_CASE("write_config round trips every setting") {
    PipelineConfig c = parse_config("", "defaults");
    c.phantom.psnr_db = 12.7;
    c.phantom.acquisition.start_depth_mm = 4.25;
    c.glue.beta_lateral = 0.125;
    c.metrics.sweep = {0.01, 0.02, 0.05};
    c.metrics.background = Rect{1, 2, 30, 40};
    c.metrics.mssim.dynamic_range = 0.07;
    c.strain.display_max = 0.04;
    c.external_flow = "flow.eldf";
    c.output = "some dir/out";
    const std::string text = config_text(c);
    const PipelineConfig back = parse_config(text, "round trip");
    CHECK(config_text(back) == text);
    CHECK(back.phantom.psnr_db == 12.7);
    CHECK(back.phantom.acquisition.start_depth_mm == 4.25);
    CHECK(back.metrics.background->cols == 40);
    CHECK(back.external_flow->string() == "flow.eldf");
    CHECK(back.output == "some dir/out");

    std::ostringstream out;
    write_config(c, out);
    CHECK(out.str() == text);

    PipelineConfig noiseless = parse_config("", "d");
    CHECK(config_text(parse_config(config_text(noiseless), "rt")) == config_text(noiseless));
}

TEST_CASE("load_config reads files and reports missing ones as Io") {
    const auto dir = testing::scratch_dir("config");
    std::ofstream(dir / "c.yaml") << "output: elsewhere\n";
    CHECK(load_config(dir / "c.yaml").output == "elsewhere");
    CHECK(load_config(std::nullopt, {"output=x"}).output == "x");
    try {
        load_config(dir / "missing.yaml");
        FAIL("expected Io");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Io);
    }
}

TEST_CASE("derive_seed: deterministic, distinct across streams and bases") {
    CHECK(derive_seed(2, 0) == derive_seed(2, 0));
    std::set<std::uint64_t> seen;
    for (std::uint64_t base = 0; base < 20; ++base)
        for (std::uint64_t stream = 0; stream < 20; ++stream) seen.insert(derive_seed(base, stream));
    CHECK(seen.size() == 400);
}
