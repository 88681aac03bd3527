// elastoglue: ultrasound strain imaging from RF frame pairs.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <omp.h>

#include <CLI11.hpp>

#include "elasto/pipeline.hpp"

namespace fs = std::filesystem;
using namespace elasto;

namespace {

struct Options {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output;
    std::optional<std::string> external_flow;
    int threads = 0;
    std::vector<std::string> sets;
    std::vector<std::string> inputs;
};

PipelineConfig resolve_config(const Options& o) {
    std::vector<std::string> overrides = o.sets;
    // Flags win over both the file and --set.
    if (o.seed) {
        overrides.push_back("phantom.seeds.scene=" + std::to_string(*o.seed));
        overrides.push_back("phantom.seeds.noise=" + std::to_string(*o.seed + 1));
    }
    if (o.output) overrides.push_back("output=\"" + *o.output + "\"");
    if (o.external_flow) overrides.push_back("coarse.external_flow=\"" + *o.external_flow + "\"");
    PipelineConfig cfg = load_config(o.config ? std::optional<fs::path>(*o.config) : std::nullopt, overrides);
    cfg.validate();
    return cfg;
}

Manifest start_manifest(const PipelineConfig& cfg, const std::string& command) {
    const std::string text = config_text(cfg);
    fs::create_directories(cfg.output);
    std::FILE* f = std::fopen((cfg.output / "config.yaml").c_str(), "wb");
    if (!f) throw Error(ErrorCode::Io, "cannot write " + (cfg.output / "config.yaml").string());
    std::fwrite(text.data(), 1, text.size(), f);
    std::fclose(f);

    Manifest m(cfg.output);
    m.note("command", command);
    m.note("config_sha256", text_sha256(text));
    m.note("seed.scene", std::to_string(cfg.phantom.scene_seed));
    m.note("seed.noise", std::to_string(cfg.phantom.noise_seed));
    m.note("seed.noise_pre", std::to_string(derive_seed(cfg.phantom.noise_seed, 0)));
    m.note("seed.noise_post", std::to_string(derive_seed(cfg.phantom.noise_seed, 1)));
    m.artifact(cfg.output / "config.yaml");
    return m;
}

fs::path input_or(const Options& o, std::size_t k, const fs::path& fallback) {
    return k < o.inputs.size() ? fs::path(o.inputs[k]) : fallback;
}

void print_metrics(const std::string& label, const PairMetrics& m) {
    const auto show = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string("n/a"); };
    std::printf("%s: mean_central %.5g  cnr %s  mssim %s  rmse coarse %s refined %s  recognizable %s\n",
                label.c_str(), m.mean_central, show(m.cnr).c_str(), show(m.mssim).c_str(),
                show(m.rmse_coarse).c_str(), show(m.rmse_refined).c_str(), m.success ? "yes" : "no");
}

int cmd_simulate(const Options& o) {
    const PipelineConfig cfg = resolve_config(o);
    Manifest manifest = start_manifest(cfg, "simulate");
    const bool sweep = !cfg.metrics.sweep.empty();
    for (double eps : sweep_strains(cfg)) {
        const PairPaths out{sweep ? cfg.output / sweep_dir_name(eps) : cfg.output};
        run_simulate(cfg, eps, out, manifest);
        std::printf("simulated strain %.4f -> %s\n", eps, out.dir.string().c_str());
    }
    manifest.write();
    return 0;
}

int cmd_coarse(const Options& o) {
    const PipelineConfig cfg = resolve_config(o);
    const PairPaths out{cfg.output};
    Manifest manifest = start_manifest(cfg, "coarse");
    run_coarse(cfg, input_or(o, 0, out.pre()), input_or(o, 1, out.post()), out, manifest);
    manifest.write();
    return 0;
}

int cmd_refine(const Options& o) {
    const PipelineConfig cfg = resolve_config(o);
    const PairPaths out{cfg.output};
    Manifest manifest = start_manifest(cfg, "refine");
    run_refine(cfg, input_or(o, 0, out.pre()), input_or(o, 1, out.post()), input_or(o, 2, out.coarse()), out,
               manifest);
    manifest.write();
    return 0;
}

int cmd_strain(const Options& o) {
    const PipelineConfig cfg = resolve_config(o);
    const PairPaths out{cfg.output};
    Manifest manifest = start_manifest(cfg, "strain");
    run_strain(cfg, input_or(o, 0, out.refined()), out, manifest);
    manifest.write();
    return 0;
}

int cmd_evaluate(const Options& o) {
    const PipelineConfig cfg = resolve_config(o);
    const PairPaths out{cfg.output};
    Manifest manifest = start_manifest(cfg, "evaluate");
    std::optional<fs::path> truth;
    if (o.inputs.size() > 1) truth = o.inputs[1];
    else if (o.inputs.empty() && fs::exists(out.truth())) truth = out.truth();
    const PairMetrics m = run_evaluate(cfg, input_or(o, 0, out.strain_bin()), truth, out, manifest);
    manifest.write();
    print_metrics("evaluate", m);
    return 0;
}

int cmd_run(const Options& o) {
    const PipelineConfig cfg = resolve_config(o);
    Manifest manifest = start_manifest(cfg, "run");
    if (!o.inputs.empty()) {
        if (o.inputs.size() < 2) throw Error(ErrorCode::Config, "run needs both pre and post inputs");
        std::optional<fs::path> truth;
        if (o.inputs.size() > 2) truth = o.inputs[2];
        const PairMetrics m = run_pair(cfg, o.inputs[0], o.inputs[1], truth, PairPaths{cfg.output}, manifest);
        manifest.write();
        print_metrics("run", m);
        return 0;
    }
    // No inputs: simulate the configured phantom (every sweep case) and process it.
    const bool sweep = !cfg.metrics.sweep.empty();
    std::string table = "applied_strain," + metrics_csv_header() + "\n";
    for (double eps : sweep_strains(cfg)) {
        const PairPaths out{sweep ? cfg.output / sweep_dir_name(eps) : cfg.output};
        const auto t0 = std::chrono::steady_clock::now();
        run_simulate(cfg, eps, out, manifest);
        const auto t1 = std::chrono::steady_clock::now();
        const PairMetrics m = run_pair(cfg, out.pre(), out.post(), out.truth(), out, manifest);
        const auto t2 = std::chrono::steady_clock::now();
        char label[96];
        std::snprintf(label, sizeof(label), "strain %.4f (simulate %.1f s, pipeline %.1f s)", eps,
                      std::chrono::duration<double>(t1 - t0).count(), std::chrono::duration<double>(t2 - t1).count());
        print_metrics(label, m);
        char eps_text[32];
        std::snprintf(eps_text, sizeof(eps_text), "%.9g", eps);
        table += std::string(eps_text) + "," + metrics_csv_row(m) + "\n";
    }
    if (sweep) {
        const fs::path path = cfg.output / "sweep.csv";
        std::FILE* f = std::fopen(path.c_str(), "wb");
        if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
        std::fwrite(table.data(), 1, table.size(), f);
        std::fclose(f);
        manifest.artifact(path);
    }
    manifest.write();
    return 0;
}

int cmd_batch(const Options& o) {
    if (o.inputs.size() != 1) throw Error(ErrorCode::Config, "batch needs exactly one pair-list CSV");
    const PipelineConfig cfg = resolve_config(o);
    const auto entries = [&] {
        try {
            return read_pair_list(o.inputs[0]);
        } catch (const Error& e) {
            throw StageError(Stage::Config, e.code(), e.what());
        }
    }();
    Manifest manifest = start_manifest(cfg, "batch");
    manifest.input(o.inputs[0]);
    const auto rows = run_batch(cfg, entries, manifest);
    manifest.write();
    std::size_t failed = 0;
    for (const auto& r : rows) {
        if (r.ok) print_metrics(r.name, r.metrics);
        else ++failed;
    }
    if (failed > 0) {
        std::fprintf(stderr, "warning: %zu of %zu pairs failed; see %s\n", failed, rows.size(),
                     (cfg.output / "summary.csv").string().c_str());
        for (const auto& r : rows) {
            if (!r.ok) std::fprintf(stderr, "  %s: %s\n", r.name.c_str(), r.error.c_str());
        }
    }
    std::printf("batch: %zu pairs, %zu ok, %zu failed\n", rows.size(), rows.size() - failed, failed);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ultrasound strain imaging: coarse block matching refined by global regularised optimisation."};
    app.require_subcommand(1);
    Options o;
    app.add_option("--config,-c", o.config, "YAML configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", o.seed, "phantom seed (scene = N, noise = N + 1)");
    app.add_option("--output,-o", o.output, "output directory");
    app.add_option("--external-flow", o.external_flow, "initial displacement field (ELDF or CSV) instead of block matching");
    app.add_option("--threads", o.threads, "worker threads (0: OpenMP default)")->check(CLI::NonNegativeNumber);
    app.add_option("--set", o.sets, "override a config key, section.key=value (repeatable)");

    struct Command {
        const char* name;
        const char* help;
        const char* inputs;
        int (*fn)(const Options&);
    };
    const Command commands[] = {
        {"simulate", "render a phantom pair (one per sweep strain) with ground truth", "", cmd_simulate},
        {"coarse", "block-matching displacement", "[pre post]", cmd_coarse},
        {"refine", "global refinement of an initial field", "[pre post [init]]", cmd_refine},
        {"strain", "least-squares axial strain of a field", "[field]", cmd_strain},
        {"evaluate", "strain metrics, with ground truth when available", "[strain [truth]]", cmd_evaluate},
        {"run", "full chain; simulates the phantom when no inputs are given", "[pre post [truth]]", cmd_run},
        {"batch", "run a pair list (name,pre,post[,truth]) into summary.csv", "pairs.csv", cmd_batch},
    };
    int (*selected)(const Options&) = nullptr;
    for (const Command& c : commands) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        sub->fallthrough();
        if (*c.inputs) sub->add_option("inputs", o.inputs, c.inputs);
        sub->callback([&selected, fn = c.fn] { selected = fn; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ExitCode::Usage);
    }
    if (o.threads > 0) omp_set_num_threads(o.threads);

    try {
        return selected(o);
    } catch (const StageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(e.exit_code());
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        if (e.code() == ErrorCode::Config) return static_cast<int>(ExitCode::Config);
        if (e.code() == ErrorCode::Io) return static_cast<int>(ExitCode::Io);
        return static_cast<int>(ExitCode::Internal);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return static_cast<int>(ExitCode::Internal);
    }
}
