#include "elasto/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

namespace elasto {

namespace fs = std::filesystem;

namespace {

const char* stage_name(Stage s) {
    switch (s) {
        case Stage::Config: return "config";
        case Stage::Simulate: return "simulate";
        case Stage::Coarse: return "coarse";
        case Stage::Refine: return "refine";
        case Stage::Strain: return "strain";
        case Stage::Evaluate: return "evaluate";
    }
    return "?";
}

// Runs `f`, turning library errors into StageError for `stage`.
template <class F>
auto in_stage(Stage stage, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(stage, e.code(), e.what());
    } catch (const std::bad_alloc&) {
        throw StageError(stage, ErrorCode::InvalidArgument, "out of memory");
    }
}

// Loading problems of any kind are reported as I/O failures.
template <class F>
auto load_input(Stage stage, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        throw StageError(stage, ErrorCode::Io, e.what());
    }
}

RfFrame read_rf(Stage stage, const fs::path& path, const PipelineConfig& config) {
    return load_input(stage, [&] { return load_frame(path, format_for(path), config.phantom.acquisition.metadata()); });
}

DisplacementField read_disp(Stage stage, const fs::path& path) {
    return load_input(stage, [&] { return load_field(path, format_for(path)); });
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create directory " + dir.string() + ": " + ec.message());
}

std::string fmt_num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_num(*v) : ""; }

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else if (c == '\n' || c == '\r') out += ' ';
        else out += c;
    }
    return out + "\"";
}

std::string hex(const unsigned char* data, unsigned len) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned k = 0; k < len; ++k) {
        out += digits[data[k] >> 4];
        out += digits[data[k] & 0xF];
    }
    return out;
}

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new()) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) throw Error(ErrorCode::Io, "SHA-256 unavailable");
    }
    ~Sha256() { EVP_MD_CTX_free(ctx_); }
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    void update(const void* data, std::size_t len) { EVP_DigestUpdate(ctx_, data, len); }
    std::string finish() {
        std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
        unsigned len = 0;
        EVP_DigestFinal_ex(ctx_, md.data(), &len);
        return hex(md.data(), len);
    }

private:
    EVP_MD_CTX* ctx_;
};

// Percentile by nearest rank over all entries.
double percentile(const Eigen::MatrixXd& m, double q) {
    std::vector<double> v(m.data(), m.data() + m.size());
    const auto k = static_cast<std::size_t>(std::llround(q * static_cast<double>(v.size() - 1)));
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
    return v[k];
}

std::string strain_csv_text(const StrainImage& s) {
    std::string out;
    out.reserve(static_cast<std::size_t>(s.values.size()) * 12);
    char buf[32];
    for (Index i = 0; i < s.values.rows(); ++i) {
        for (Index j = 0; j < s.values.cols(); ++j) {
            const int len = std::snprintf(buf, sizeof(buf), j ? ",%.9g" : "%.9g", s.values(i, j));
            out.append(buf, static_cast<std::size_t>(len));
        }
        out += '\n';
    }
    return out;
}

std::optional<double> finite_or_none(double v) {
    if (std::isnan(v)) return std::nullopt;
    return v;
}

}  // namespace

StageError::StageError(Stage stage, ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(stage_name(stage)) + ": " + what), stage_(stage), code_(code) {}

ExitCode StageError::exit_code() const noexcept { return exit_code_for(stage_, code_); }

ExitCode exit_code_for(Stage stage, ErrorCode code) noexcept {
    if (code == ErrorCode::Io) return ExitCode::Io;
    if (code == ErrorCode::Config) return ExitCode::Config;
    switch (stage) {
        case Stage::Config: return ExitCode::Config;
        case Stage::Simulate: return ExitCode::Simulate;
        case Stage::Coarse: return ExitCode::Coarse;
        case Stage::Refine: return ExitCode::Refine;
        case Stage::Strain: return ExitCode::Strain;
        case Stage::Evaluate: return ExitCode::Evaluate;
    }
    return ExitCode::Internal;
}

// ----------------------------------------------------------------- in memory

SimulatedPair simulate_pair(const PipelineConfig& config, double applied_strain) {
    const PhantomSection& p = config.phantom;
    const PhantomScene scene = generate_scene(p.scene, p.scene_seed);
    DeformationModel model = deformation_for(scene, applied_strain);
    model.poisson_ratio = p.poisson_ratio;
    model.transition_mm = p.transition_mm;
    RfFrame pre = render_rf(scene, p.acquisition);
    DeformedPair deformed = deform_and_render(scene, model, p.acquisition);
    return {add_noise(pre, p.psnr_db, derive_seed(p.noise_seed, 0)),
            add_noise(deformed.post, p.psnr_db, derive_seed(p.noise_seed, 1)), std::move(deformed.truth),
            applied_strain};
}

Rect central_region(GridDims dims) {
    const auto span = [](Index n) { return std::max<Index>(1, static_cast<Index>(std::llround(0.6 * static_cast<double>(n)))); };
    const Index rows = span(dims.rows);
    const Index cols = span(dims.cols);
    return {(dims.rows - rows) / 2, (dims.cols - cols) / 2, rows, cols};
}

std::optional<RegionSpec> resolve_regions(const PipelineConfig& config, GridDims dims) {
    std::optional<Rect> target = config.metrics.target;
    std::optional<Rect> background = config.metrics.background;
    const auto& inc = config.phantom.scene.inclusion;
    if ((!target || !background) && inc) {
        const AcquisitionConfig& acq = config.phantom.acquisition;
        const double dz = acq.axial_spacing_mm();
        const double z0 = axial_origin(acq, config.phantom.scene.depth_mm);
        const double x0 = lateral_origin(acq, config.phantom.scene.width_mm);
        const double rc = (inc->center_axial_mm - z0) / dz;
        const double cc = (inc->center_lateral_mm - x0) / acq.lateral_pitch_mm;
        const double hr = 0.5 * inc->radius_mm / dz;
        const double hc = 0.5 * inc->radius_mm / acq.lateral_pitch_mm;
        const auto square = [&](double col_centre) {
            Rect r;
            r.row0 = static_cast<Index>(std::llround(rc - hr));
            r.col0 = static_cast<Index>(std::llround(col_centre - hc));
            r.rows = std::max<Index>(1, static_cast<Index>(std::llround(2.0 * hr)));
            r.cols = std::max<Index>(1, static_cast<Index>(std::llround(2.0 * hc)));
            return r;
        };
        if (!target) target = square(cc);
        if (!background) {
            const double shift = 2.0 * inc->radius_mm / acq.lateral_pitch_mm;
            const double mid = 0.5 * static_cast<double>(dims.cols - 1);
            background = square(cc <= mid ? cc + shift : cc - shift);
        }
    }
    if (!target || !background) return std::nullopt;
    RegionSpec regions{*target, *background};
    if (!regions.target.within(dims) || !regions.background.within(dims)) return std::nullopt;
    return regions;
}

double field_rmse(const DisplacementField& estimate, const DisplacementField& truth) {
    if (estimate.dims() != truth.dims()) {
        throw Error(ErrorCode::DimensionMismatch, "estimate and truth fields differ in size");
    }
    const double sq = (estimate.axial - truth.axial).squaredNorm() + (estimate.lateral - truth.lateral).squaredNorm();
    return std::sqrt(sq / static_cast<double>(truth.axial.size()));
}

PairMetrics evaluate_pair(const StrainImage& strain, const DisplacementField* truth, const DisplacementField* coarse,
                          const DisplacementField* refined, const PipelineConfig& config) {
    PairMetrics m;
    const Rect central = central_region(strain.dims());
    m.mean_central = strain.values.block(central.row0, central.col0, central.rows, central.cols).mean();

    const auto regions = resolve_regions(config, strain.dims());
    if (regions) {
        regions->validate(strain.dims());
        const auto mean_of = [&](const Rect& r) { return strain.values.block(r.row0, r.col0, r.rows, r.cols).mean(); };
        m.mean_target = mean_of(regions->target);
        m.mean_background = mean_of(regions->background);
        m.snr_target = finite_or_none(snr_e(strain, regions->target));
        m.snr_background = finite_or_none(snr_e(strain, regions->background));
        m.cnr = finite_or_none(cnr_e(strain, *regions));
    }
    if (truth) {
        if (truth->dims() != strain.dims()) throw Error(ErrorCode::DimensionMismatch, "truth field and strain differ in size");
        const StrainImage ideal = least_squares_strain(*truth, config.strain.params);
        MssimParams mp = config.metrics.mssim;
        // Dynamic range from the ground truth; a uniform truth falls back to its magnitude.
        if (!mp.dynamic_range) {
            const double range = ideal.values.maxCoeff() - ideal.values.minCoeff();
            const double mag = ideal.values.cwiseAbs().maxCoeff();
            mp.dynamic_range = range > 1e-12 * std::max(mag, 1e-300) ? range : (mag > 0.0 ? mag : 1.0);
        }
        if (strain.values.rows() >= mp.window && strain.values.cols() >= mp.window) {
            m.mssim = mssim(ideal.values, strain.values, mp);
        }
        if (coarse) m.rmse_coarse = field_rmse(*coarse, *truth);
        if (refined) m.rmse_refined = field_rmse(*refined, *truth);
    }
    m.success = m.cnr && *m.cnr >= config.metrics.success_cnr && m.snr_background && std::isfinite(*m.snr_background);
    return m;
}

PairResult process_pair(const RfFrame& pre, const RfFrame& post, const DisplacementField* truth,
                        const PipelineConfig& config) {
    const auto [a, b] = in_stage(Stage::Coarse, [&] { return preprocess_pair(pre, post, config.preprocess); });
    PairResult r;
    r.coarse = in_stage(Stage::Coarse, [&] {
        if (config.external_flow) return load_input(Stage::Coarse, [&] { return import_external_flow(*config.external_flow, a.dims()); });
        return estimate_coarse(a, b, config.coarse);
    });
    r.refined = in_stage(Stage::Refine, [&] { return glue_refine(a, b, r.coarse, config.glue); });
    r.strain = in_stage(Stage::Strain, [&] { return least_squares_strain(r.refined.field, config.strain.params); });
    r.metrics = in_stage(Stage::Evaluate, [&] { return evaluate_pair(r.strain, truth, &r.coarse, &r.refined.field, config); });
    return r;
}

// ----------------------------------------------------------------- reports

std::string metrics_csv_header() {
    return "mean_central,mean_target,mean_background,snr_target,snr_background,cnr,mssim,rmse_coarse,rmse_refined,"
           "recognizable";
}

std::string metrics_csv_row(const PairMetrics& m) {
    return fmt_num(m.mean_central) + "," + fmt_opt(m.mean_target) + "," + fmt_opt(m.mean_background) + "," +
           fmt_opt(m.snr_target) + "," + fmt_opt(m.snr_background) + "," + fmt_opt(m.cnr) + "," + fmt_opt(m.mssim) +
           "," + fmt_opt(m.rmse_coarse) + "," + fmt_opt(m.rmse_refined) + "," + (m.success ? "1" : "0");
}

std::string metrics_report(const PairMetrics& m, const PipelineConfig& config) {
    std::ostringstream out;
    const auto line = [&](const char* name, const std::optional<double>& v, const char* unit = "") {
        out << name << ": " << (v ? fmt_num(*v) + unit : std::string("n/a")) << '\n';
    };
    out << "# strain-image metrics\n"
        << "# MSSIM compares the estimated strain image with the strain image of the\n"
        << "# ground-truth displacement, both from the same least-squares window.\n"
        << "# RMSE is the displacement error magnitude in samples (axial) and lines (lateral).\n";
    out << "strain_window: " << config.strain.params.window_len << '\n';
    line("mean_central", m.mean_central);
    line("mean_target", m.mean_target);
    line("mean_background", m.mean_background);
    line("snr_target", m.snr_target);
    line("snr_background", m.snr_background);
    line("cnr", m.cnr);
    line("mssim", m.mssim);
    line("rmse_coarse", m.rmse_coarse);
    line("rmse_refined", m.rmse_refined);
    out << "recognizable: " << (m.success ? "yes" : "no") << " (cnr >= " << fmt_num(config.metrics.success_cnr)
        << " with finite background snr)\n";
    return out.str();
}

std::vector<double> sweep_strains(const PipelineConfig& config) {
    if (config.metrics.sweep.empty()) return {config.phantom.applied_strain};
    return config.metrics.sweep;
}

std::string sweep_dir_name(double applied_strain) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "strain_%.3f", applied_strain);
    return buf;
}

// ----------------------------------------------------------------- manifest

std::string file_sha256(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    Sha256 sha;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        sha.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return sha.finish();
}

std::string text_sha256(const std::string& text) {
    Sha256 sha;
    sha.update(text.data(), text.size());
    return sha.finish();
}

void Manifest::note(const std::string& key, const std::string& value) { notes_.emplace_back(key, value); }
void Manifest::input(const fs::path& path) { inputs_.push_back(path); }
void Manifest::artifact(const fs::path& path) { artifacts_.push_back(path); }

void Manifest::merge(const Manifest& other) {
    notes_.insert(notes_.end(), other.notes_.begin(), other.notes_.end());
    inputs_.insert(inputs_.end(), other.inputs_.begin(), other.inputs_.end());
    artifacts_.insert(artifacts_.end(), other.artifacts_.begin(), other.artifacts_.end());
}

void Manifest::write() const {
    std::ostringstream out;
    out << "# elastoglue manifest\n";
    for (const auto& [k, v] : notes_) out << k << ": " << v << '\n';
    const auto shown = [&](const fs::path& p) {
        const fs::path rel = p.lexically_proximate(root_);
        return rel.empty() ? p.generic_string() : rel.generic_string();
    };
    // Digest lines use the sha256sum layout, relative to the manifest's directory.
    out << "[inputs]\n";
    for (const auto& p : inputs_) out << file_sha256(p) << "  " << shown(p) << '\n';
    out << "[artifacts]\n";
    for (const auto& p : artifacts_) out << file_sha256(p) << "  " << shown(p) << '\n';
    ensure_dir(root_);
    write_text(root_ / "manifest.txt", out.str());
}

// ----------------------------------------------------------------- stages

void run_simulate(const PipelineConfig& config, double applied_strain, const PairPaths& out, Manifest& manifest) {
    const SimulatedPair pair = in_stage(Stage::Simulate, [&] { return simulate_pair(config, applied_strain); });
    in_stage(Stage::Simulate, [&] {
        ensure_dir(out.dir);
        save_frame(pair.pre, out.pre(), FileFormat::Binary);
        save_frame(pair.post, out.post(), FileFormat::Binary);
        save_field(pair.truth, out.truth(), FileFormat::Binary);
    });
    manifest.artifact(out.pre());
    manifest.artifact(out.post());
    manifest.artifact(out.truth());
}

void run_coarse(const PipelineConfig& config, const fs::path& pre_path, const fs::path& post_path, const PairPaths& out,
                Manifest& manifest) {
    const RfFrame pre = read_rf(Stage::Coarse, pre_path, config);
    const RfFrame post = read_rf(Stage::Coarse, post_path, config);
    manifest.input(pre_path);
    manifest.input(post_path);
    const DisplacementField field = in_stage(Stage::Coarse, [&] {
        if (config.external_flow) {
            const DisplacementField f =
                load_input(Stage::Coarse, [&] { return import_external_flow(*config.external_flow, pre.dims()); });
            manifest.input(*config.external_flow);
            return f;
        }
        const auto [a, b] = preprocess_pair(pre, post, config.preprocess);
        return estimate_coarse(a, b, config.coarse);
    });
    in_stage(Stage::Coarse, [&] {
        ensure_dir(out.dir);
        save_field(field, out.coarse(), FileFormat::Binary);
    });
    manifest.artifact(out.coarse());
}

void run_refine(const PipelineConfig& config, const fs::path& pre_path, const fs::path& post_path, const fs::path& init,
                const PairPaths& out, Manifest& manifest) {
    const RfFrame pre = read_rf(Stage::Refine, pre_path, config);
    const RfFrame post = read_rf(Stage::Refine, post_path, config);
    const DisplacementField start = read_disp(Stage::Refine, init);
    manifest.input(pre_path);
    manifest.input(post_path);
    manifest.input(init);
    const RefineResult result = in_stage(Stage::Refine, [&] {
        const auto [a, b] = preprocess_pair(pre, post, config.preprocess);
        if (start.dims() != a.dims()) throw Error(ErrorCode::DimensionMismatch, "initial field does not match the frames");
        return glue_refine(a, b, start, config.glue);
    });
    in_stage(Stage::Refine, [&] {
        ensure_dir(out.dir);
        save_field(result.field, out.refined(), FileFormat::Binary);
        std::ostringstream log;
        write_diagnostics(result.log, log);
        if (result.out_of_bounds) log << "# warning: refined displacement exceeds the frame size\n";
        write_text(out.glue_log(), log.str());
    });
    manifest.artifact(out.refined());
    manifest.artifact(out.glue_log());
}

void run_strain(const PipelineConfig& config, const fs::path& field_path, const PairPaths& out, Manifest& manifest) {
    const DisplacementField field = read_disp(Stage::Strain, field_path);
    manifest.input(field_path);
    const StrainImage strain = in_stage(Stage::Strain, [&] { return least_squares_strain(field, config.strain.params); });
    in_stage(Stage::Strain, [&] {
        ensure_dir(out.dir);
        save_frame(RfFrame(strain.values.cast<float>(), config.phantom.acquisition.metadata()), out.strain_bin(),
                   FileFormat::Binary);
        write_text(out.strain_csv(), strain_csv_text(strain));
        double lo = config.strain.display_min.value_or(percentile(strain.values, 0.01));
        double hi = config.strain.display_max.value_or(percentile(strain.values, 0.99));
        if (!(hi > lo)) hi = lo + std::max(1e-6, std::abs(lo));
        write_strain_png(strain, out.strain_png(), lo, hi);
    });
    manifest.artifact(out.strain_bin());
    manifest.artifact(out.strain_csv());
    manifest.artifact(out.strain_png());
}

PairMetrics run_evaluate(const PipelineConfig& config, const fs::path& strain_path, const std::optional<fs::path>& truth_path,
                         const PairPaths& out, Manifest& manifest) {
    const RfFrame frame = load_input(Stage::Evaluate, [&] { return load_frame(strain_path, format_for(strain_path)); });
    manifest.input(strain_path);
    StrainImage strain;
    strain.values = frame.samples().cast<double>();
    strain.window_len = config.strain.params.window_len;

    std::optional<DisplacementField> truth, coarse, refined;
    if (truth_path) {
        truth = read_disp(Stage::Evaluate, *truth_path);
        manifest.input(*truth_path);
        // Stage outputs next to the strain image feed the RMSE columns.
        const fs::path dir = strain_path.parent_path().empty() ? fs::path(".") : strain_path.parent_path();
        if (fs::exists(dir / "coarse.eldf")) coarse = read_disp(Stage::Evaluate, dir / "coarse.eldf");
        if (fs::exists(dir / "refined.eldf")) refined = read_disp(Stage::Evaluate, dir / "refined.eldf");
    }
    const PairMetrics m = in_stage(Stage::Evaluate, [&] {
        return evaluate_pair(strain, truth ? &*truth : nullptr, coarse ? &*coarse : nullptr,
                             refined ? &*refined : nullptr, config);
    });
    in_stage(Stage::Evaluate, [&] {
        ensure_dir(out.dir);
        write_text(out.metrics_txt(), metrics_report(m, config));
        write_text(out.metrics_csv(), metrics_csv_header() + "\n" + metrics_csv_row(m) + "\n");
    });
    manifest.artifact(out.metrics_txt());
    manifest.artifact(out.metrics_csv());
    return m;
}

PairMetrics run_pair(const PipelineConfig& config, const fs::path& pre_path, const fs::path& post_path,
                     const std::optional<fs::path>& truth_path, const PairPaths& out, Manifest& manifest) {
    const RfFrame pre = read_rf(Stage::Coarse, pre_path, config);
    const RfFrame post = read_rf(Stage::Coarse, post_path, config);
    std::optional<DisplacementField> truth;
    if (truth_path) truth = read_disp(Stage::Evaluate, *truth_path);
    manifest.input(pre_path);
    manifest.input(post_path);
    if (truth_path) manifest.input(*truth_path);
    if (config.external_flow) manifest.input(*config.external_flow);

    const PairResult r = process_pair(pre, post, truth ? &*truth : nullptr, config);

    in_stage(Stage::Coarse, [&] {
        ensure_dir(out.dir);
        save_field(r.coarse, out.coarse(), FileFormat::Binary);
    });
    in_stage(Stage::Refine, [&] {
        save_field(r.refined.field, out.refined(), FileFormat::Binary);
        std::ostringstream log;
        write_diagnostics(r.refined.log, log);
        if (r.refined.out_of_bounds) log << "# warning: refined displacement exceeds the frame size\n";
        write_text(out.glue_log(), log.str());
    });
    in_stage(Stage::Strain, [&] {
        save_frame(RfFrame(r.strain.values.cast<float>(), pre.metadata()), out.strain_bin(), FileFormat::Binary);
        write_text(out.strain_csv(), strain_csv_text(r.strain));
        double lo = config.strain.display_min.value_or(percentile(r.strain.values, 0.01));
        double hi = config.strain.display_max.value_or(percentile(r.strain.values, 0.99));
        if (!(hi > lo)) hi = lo + std::max(1e-6, std::abs(lo));
        write_strain_png(r.strain, out.strain_png(), lo, hi);
    });
    in_stage(Stage::Evaluate, [&] {
        write_text(out.metrics_txt(), metrics_report(r.metrics, config));
        write_text(out.metrics_csv(), metrics_csv_header() + "\n" + metrics_csv_row(r.metrics) + "\n");
    });
    for (const fs::path& p : {out.coarse(), out.refined(), out.glue_log(), out.strain_bin(), out.strain_csv(),
                              out.strain_png(), out.metrics_txt(), out.metrics_csv()}) {
        manifest.artifact(p);
    }
    return r.metrics;
}

// ----------------------------------------------------------------- batch

std::vector<BatchEntry> read_pair_list(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open pair list " + path.string());
    const fs::path base = path.parent_path();
    const auto resolve = [&](const std::string& p) { return fs::path(p).is_relative() ? base / p : fs::path(p); };
    std::vector<BatchEntry> entries;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        if (line_no == 1 && line.starts_with("name,")) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        const auto where = path.string() + ":" + std::to_string(line_no);
        if (cells.size() < 3 || cells.size() > 4) throw Error(ErrorCode::Config, where + ": expected name,pre,post[,truth]");
        const std::string& name = cells[0];
        if (name.empty() || name == "." || name == ".." || name.find_first_of("/\\") != std::string::npos) {
            throw Error(ErrorCode::Config, where + ": invalid pair name '" + name + "'");
        }
        for (const auto& e : entries) {
            if (e.name == name) throw Error(ErrorCode::Config, where + ": duplicate pair name '" + name + "'");
        }
        BatchEntry e{name, resolve(cells[1]), resolve(cells[2]), std::nullopt};
        if (cells.size() == 4 && !cells[3].empty()) e.truth = resolve(cells[3]);
        entries.push_back(std::move(e));
    }
    return entries;
}

std::vector<BatchRow> run_batch(const PipelineConfig& config, const std::vector<BatchEntry>& entries, Manifest& manifest) {
    const auto count = static_cast<std::ptrdiff_t>(entries.size());
    std::vector<BatchRow> rows(entries.size());
    std::vector<Manifest> parts(entries.size(), Manifest(config.output));
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t k = 0; k < count; ++k) {
        const BatchEntry& e = entries[static_cast<std::size_t>(k)];
        BatchRow& row = rows[static_cast<std::size_t>(k)];
        row.name = e.name;
        try {
            row.metrics = run_pair(config, e.pre, e.post, e.truth, PairPaths{config.output / e.name},
                                   parts[static_cast<std::size_t>(k)]);
            row.ok = true;
        } catch (const std::exception& ex) {
            row.error = ex.what();
            parts[static_cast<std::size_t>(k)] = Manifest(config.output);
        }
    }
    for (const Manifest& m : parts) manifest.merge(m);
    ensure_dir(config.output);
    const fs::path summary = config.output / "summary.csv";
    write_text(summary, summary_csv(rows));
    manifest.artifact(summary);
    return rows;
}

std::string summary_csv(const std::vector<BatchRow>& rows) {
    std::string out = "name,status," + metrics_csv_header() + ",error\n";
    for (const BatchRow& r : rows) {
        out += csv_escape(r.name) + ",";
        if (r.ok) out += "ok," + metrics_csv_row(r.metrics) + ",\n";
        else out += "failed,,,,,,,,,,0," + csv_escape(r.error) + "\n";
    }
    return out;
}

}  // namespace elasto
