#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "elasto/pipeline.hpp"
#include "support.hpp"

using namespace elasto;
namespace fs = std::filesystem;

namespace {

const char* const kSmallConfig = R"(phantom:
  scene:
    depth_mm: 12
    width_mm: 18
    inclusion: {center_axial_mm: 6, center_lateral_mm: 9, radius_mm: 2, stiffness_ratio: 0.5}
  acquisition: {samples: 384, lines: 48}
strain:
  window_len: 43
)";

fs::path small_config(const fs::path& dir) {
    const fs::path p = dir / "small.yaml";
    std::ofstream(p) << kSmallConfig;
    return p;
}

// Runs the CLI with stdout and stderr captured into dir/log.txt; returns the exit status.
int run(const fs::path& dir, const std::string& args) {
    const std::string cmd = std::string(ELASTOGLUE_BIN) + " " + args + " > " + (dir / "log.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("simulate is deterministic for a fixed seed") {
    const auto dir = testing::scratch_dir("cli_simulate");
    const fs::path cfg = small_config(dir);
    REQUIRE(run(dir, "simulate -c " + quoted(cfg) + " --seed 5 -o " + quoted(dir / "a")) == 0);
    REQUIRE(run(dir, "simulate -c " + quoted(cfg) + " --seed 5 -o " + quoted(dir / "b")) == 0);
    REQUIRE(run(dir, "simulate -c " + quoted(cfg) + " --seed 6 -o " + quoted(dir / "c")) == 0);
    for (const char* name : {"pre.elrf", "post.elrf", "truth.eldf"})
        CHECK(file_sha256(dir / "a" / name) == file_sha256(dir / "b" / name));
    CHECK(file_sha256(dir / "a" / "pre.elrf") != file_sha256(dir / "c" / "pre.elrf"));
    const std::string manifest = slurp(dir / "a" / "manifest.txt");
    CHECK(manifest.find("seed.scene: 5") != std::string::npos);
    CHECK(manifest.find("seed.noise: 6") != std::string::npos);
}

TEST_CASE("zero applied strain gives a zero ground-truth field") {
    const auto dir = testing::scratch_dir("cli_zero");
    REQUIRE(run(dir, "simulate -c " + quoted(small_config(dir)) + " --set phantom.deformation.applied_strain=0 -o " +
                         quoted(dir / "z")) == 0);
    const DisplacementField truth = load_field(dir / "z" / "truth.eldf", FileFormat::Binary);
    CHECK(truth.axial.cwiseAbs().maxCoeff() == 0.0);
    CHECK(truth.lateral.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("a strain sweep writes one directory per strain") {
    const auto dir = testing::scratch_dir("cli_sweep");
    REQUIRE(run(dir, "simulate -c " + quoted(small_config(dir)) +
                         " --set 'metrics.sweep=[0.01,0.02,0.03,0.04,0.05,0.06,0.07]' -o " + quoted(dir / "s")) == 0);
    int count = 0;
    for (double eps : {0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07}) {
        const fs::path sub = dir / "s" / sweep_dir_name(eps);
        CHECK(fs::exists(sub / "pre.elrf"));
        CHECK(fs::exists(sub / "truth.eldf"));
        count += fs::is_directory(sub);
    }
    CHECK(count == 7);
}

TEST_CASE("exit codes: usage, config, io") {
    const auto dir = testing::scratch_dir("cli_errors");
    CHECK(run(dir, "") == int(ExitCode::Usage));
    CHECK(run(dir, "frobnicate") == int(ExitCode::Usage));
    CHECK(run(dir, "coarse " + quoted(dir / "missing_pre.elrf") + " " + quoted(dir / "missing_post.elrf") + " -o " +
                       quoted(dir / "out")) == int(ExitCode::Io));
    CHECK(slurp(dir / "log.txt").find("missing_pre.elrf") != std::string::npos);

    std::ofstream(dir / "unknown.yaml") << "phantom:\n  colour: blue\n";
    CHECK(run(dir, "simulate -c " + quoted(dir / "unknown.yaml") + " -o " + quoted(dir / "out")) ==
          int(ExitCode::Config));
    CHECK(slurp(dir / "log.txt").find("colour") != std::string::npos);
    CHECK(run(dir, "simulate --set strain.window_len=4 -o " + quoted(dir / "out")) == int(ExitCode::Config));
    CHECK(run(dir, "batch " + quoted(dir / "no_such_list.csv") + " -o " + quoted(dir / "out")) == int(ExitCode::Io));
}

TEST_CASE("staged commands chain into a full result; identical frames give zero strain") {
    const auto dir = testing::scratch_dir("cli_stages");
    const std::string cfg = " -c " + quoted(small_config(dir));
    const fs::path out = dir / "p";
    REQUIRE(run(dir, "simulate" + cfg + " -o " + quoted(out)) == 0);
    REQUIRE(run(dir, "coarse" + cfg + " -o " + quoted(out)) == 0);
    REQUIRE(run(dir, "refine" + cfg + " -o " + quoted(out)) == 0);
    REQUIRE(run(dir, "strain" + cfg + " -o " + quoted(out)) == 0);
    REQUIRE(run(dir, "evaluate" + cfg + " -o " + quoted(out)) == 0);
    CHECK(slurp(dir / "log.txt").find("cnr") != std::string::npos);
    const PairPaths paths{out};
    for (const auto& p : {paths.coarse(), paths.refined(), paths.glue_log(), paths.strain_bin(), paths.strain_png(),
                          paths.metrics_txt(), paths.metrics_csv()})
        CHECK(fs::exists(p));

    const fs::path same = dir / "same";
    REQUIRE(run(dir, "run" + cfg + " " + quoted(paths.pre()) + " " + quoted(paths.pre()) + " -o " + quoted(same)) ==
            0);
    const RfFrame strain = load_frame(PairPaths{same}.strain_bin(), FileFormat::Binary);
    CHECK(strain.samples().cwiseAbs().maxCoeff() < 1e-6f);
}

TEST_CASE("batch: a corrupt pair is reported and the rest succeed") {
    const auto dir = testing::scratch_dir("cli_batch");
    const std::string cfg = " -c " + quoted(small_config(dir));
    REQUIRE(run(dir, "simulate" + cfg + " --set 'metrics.sweep=[0.01,0.02]' -o " + quoted(dir / "sim")) == 0);
    const fs::path a = dir / "sim" / sweep_dir_name(0.01), b = dir / "sim" / sweep_dir_name(0.02);
    std::ofstream(dir / "corrupt.elrf") << "not an rf frame";
    std::ofstream(dir / "pairs.csv") << "name,pre,post,truth\n"
                                     << "one," << (a / "pre.elrf").string() << "," << (a / "post.elrf").string() << ","
                                     << (a / "truth.eldf").string() << "\n"
                                     << "bad," << (dir / "corrupt.elrf").string() << "," << (a / "post.elrf").string()
                                     << "\n"
                                     << "two," << (b / "pre.elrf").string() << "," << (b / "post.elrf").string() << "\n";
    CHECK(run(dir, "batch" + cfg + " " + quoted(dir / "pairs.csv") + " -o " + quoted(dir / "out")) == 0);
    CHECK(slurp(dir / "log.txt").find("1 failed") != std::string::npos);

    std::istringstream summary(slurp(dir / "out" / "summary.csv"));
    std::vector<std::string> lines;
    for (std::string l; std::getline(summary, l);) lines.push_back(l);
    REQUIRE(lines.size() == 4);
    CHECK(lines[0].rfind("name,status,", 0) == 0);
    CHECK(lines[1].rfind("one,ok,", 0) == 0);
    CHECK(lines[2].rfind("bad,failed,", 0) == 0);
    CHECK(lines[3].rfind("two,ok,", 0) == 0);
    CHECK(fs::exists(dir / "out" / "one" / "strain.png"));
    CHECK_FALSE(fs::exists(dir / "out" / "bad" / "strain.png"));

    std::ofstream(dir / "empty.csv") << "name,pre,post\n";
    CHECK(run(dir, "batch" + cfg + " " + quoted(dir / "empty.csv") + " -o " + quoted(dir / "empty_out")) == 0);
    CHECK(slurp(dir / "empty_out" / "summary.csv") == summary_csv({}));
}
