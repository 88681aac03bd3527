#include "elasto/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace elasto {

namespace {

struct Context {
    std::string source;
    std::set<std::string> overridden;  // dotted paths set from the command line
};

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorCode::Config, msg); }

std::string join(const std::string& prefix, std::string_view key) {
    return prefix.empty() ? std::string(key) : prefix + "." + std::string(key);
}

template <class T>
const char* type_name() {
    if constexpr (std::is_same_v<T, bool>) return "a boolean";
    else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) return "a non-negative integer";
    else if constexpr (std::is_integral_v<T>) return "an integer";
    else if constexpr (std::is_floating_point_v<T>) return "a number";
    else return "a string";
}

class Reader {
public:
    Reader(YAML::Node node, std::string path, const Context& ctx) : node_(std::move(node)), path_(std::move(path)), ctx_(ctx) {
        if (node_ && !node_.IsNull() && !node_.IsMap()) fail(where(node_, path_) + ": '" + path_ + "' must be a mapping");
    }

    std::string where(const YAML::Node& n, const std::string& path) const {
        for (const auto& o : ctx_.overridden) {
            if (path == o || path.starts_with(o + ".")) return "--set " + o;
        }
        const YAML::Mark m = n.Mark();
        if (m.is_null()) return ctx_.source;
        return ctx_.source + ":" + std::to_string(m.line + 1) + ":" + std::to_string(m.column + 1);
    }
    std::string where() const { return where(node_, path_); }
    const std::string& path() const { return path_; }

    bool has(std::string_view key) const { return node_ && node_.IsMap() && node_[std::string(key)]; }

    template <class T>
    void get(std::string_view key, T& out) {
        const YAML::Node n = child(key);
        if (!n) return;
        out = convert<T>(n, join(path_, key));
    }

    template <class T>
    void get(std::string_view key, std::optional<T>& out) {
        const YAML::Node n = child(key);
        if (!n) return;
        if (n.IsNull()) {
            out.reset();
            return;
        }
        out = convert<T>(n, join(path_, key));
    }

    void get_extent(std::string_view key, Extent& out) {
        const YAML::Node n = child(key);
        if (!n) return;
        const std::string p = join(path_, key);
        if (!n.IsSequence() || n.size() != 2) fail(where(n, p) + ": '" + p + "' expects [axial, lateral]");
        out.axial = convert<Index>(n[0], p);
        out.lateral = convert<Index>(n[1], p);
    }

    void get_list(std::string_view key, std::vector<double>& out) {
        const YAML::Node n = child(key);
        if (!n) return;
        const std::string p = join(path_, key);
        if (n.IsNull()) {
            out.clear();
            return;
        }
        if (!n.IsSequence()) fail(where(n, p) + ": '" + p + "' expects a list of numbers");
        out.clear();
        for (const auto& item : n) out.push_back(convert<double>(item, p));
    }

    /// Nested mapping; absent keys give an empty reader.
    Reader section(std::string_view key) { return Reader(child(key), join(path_, key), ctx_); }

    /// Whether `key` is present and explicitly null.
    bool is_null(std::string_view key) {
        const YAML::Node n = child(key);
        return n && n.IsNull();
    }

    /// Rejects every key that no get/section call asked for.
    void finish() const {
        if (!node_ || !node_.IsMap()) return;
        for (const auto& kv : node_) {
            const std::string key = kv.first.Scalar();
            if (!seen_.contains(key)) {
                const std::string p = join(path_, key);
                fail(where(kv.first, p) + ": unknown key '" + p + "'");
            }
        }
    }

    /// Runs a validate() and prefixes any error with this section's location.
    template <class F>
    void check(F&& f) const {
        try {
            f();
        } catch (const Error& e) {
            fail(where() + ": invalid '" + path_ + "': " + e.what());
        }
    }

private:
    YAML::Node child(std::string_view key) {
        seen_.insert(std::string(key));
        if (!node_ || !node_.IsMap()) return YAML::Node(YAML::NodeType::Undefined);
        const YAML::Node n = node_[std::string(key)];
        return n ? n : YAML::Node(YAML::NodeType::Undefined);
    }

    template <class T>
    T convert(const YAML::Node& n, const std::string& p) const {
        const auto bad = [&] {
            fail(where(n, p) + ": '" + p + "' expects " + type_name<T>() + ", got '" + (n.IsScalar() ? n.Scalar() : "<structure>") + "'");
        };
        if (!n.IsScalar()) bad();
        if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
            if (n.Scalar().starts_with("-")) bad();
        }
        try {
            return n.as<T>();
        } catch (const YAML::Exception&) {
            bad();
        }
        return T{};
    }

    YAML::Node node_;
    std::string path_;
    const Context& ctx_;
    std::set<std::string> seen_;
};

void read_phantom(Reader r, PhantomSection& p) {
    {
        Reader s = r.section("scene");
        s.get("depth_mm", p.scene.depth_mm);
        s.get("width_mm", p.scene.width_mm);
        s.get("density_per_mm2", p.scene.density_per_mm2);
        if (s.is_null("inclusion")) {
            p.scene.inclusion.reset();
        } else if (s.has("inclusion")) {
            Inclusion inc = p.scene.inclusion.value_or(Inclusion{});
            Reader i = s.section("inclusion");
            i.get("center_axial_mm", inc.center_axial_mm);
            i.get("center_lateral_mm", inc.center_lateral_mm);
            i.get("radius_mm", inc.radius_mm);
            i.get("stiffness_ratio", inc.stiffness_ratio);
            i.finish();
            p.scene.inclusion = inc;
        } else {
            s.section("inclusion");
        }
        s.finish();
        s.check([&] {
            if (!(p.scene.depth_mm > 0.0) || !(p.scene.width_mm > 0.0)) fail("scene extent must be positive");
            if (!(p.scene.density_per_mm2 >= kMinScattererDensity)) fail("density_per_mm2 must be >= 10");
            if (p.scene.inclusion && (!(p.scene.inclusion->radius_mm > 0.0) || !(p.scene.inclusion->stiffness_ratio > 0.0))) {
                fail("inclusion radius and stiffness_ratio must be > 0");
            }
        });
    }
    {
        Reader d = r.section("deformation");
        d.get("applied_strain", p.applied_strain);
        d.get("poisson_ratio", p.poisson_ratio);
        d.get("transition_mm", p.transition_mm);
        d.finish();
        d.check([&] {
            DeformationModel m;
            m.applied_strain = p.applied_strain;
            m.poisson_ratio = p.poisson_ratio;
            m.transition_mm = p.transition_mm;
            m.validate();
        });
    }
    {
        Reader a = r.section("acquisition");
        AcquisitionConfig& acq = p.acquisition;
        a.get("center_frequency_hz", acq.center_frequency);
        a.get("sampling_rate_hz", acq.sampling_rate);
        a.get("sound_speed_m_s", acq.sound_speed);
        a.get("samples", acq.samples);
        a.get("lines", acq.lines);
        a.get("lateral_pitch_mm", acq.lateral_pitch_mm);
        a.get("start_depth_mm", acq.start_depth_mm);
        a.get("lateral_origin_mm", acq.lateral_origin_mm);
        a.get("sigma_axial_mm", acq.sigma_axial_mm);
        a.get("sigma_lateral_mm", acq.sigma_lateral_mm);
        a.get("psf_truncation", acq.psf_truncation);
        a.finish();
        a.check([&] { acq.validate(); });
    }
    {
        Reader n = r.section("noise");
        n.get("psnr_db", p.psnr_db);
        n.finish();
        n.check([&] {
            if (std::isnan(p.psnr_db) || p.psnr_db == -std::numeric_limits<double>::infinity()) {
                fail("psnr_db must be a finite number or .inf");
            }
        });
    }
    {
        Reader s = r.section("seeds");
        s.get("scene", p.scene_seed);
        s.get("noise", p.noise_seed);
        s.finish();
    }
    r.finish();
}

void read_rect(Reader& parent, std::string_view key, std::optional<Rect>& out) {
    if (parent.is_null(key)) {
        out.reset();
        return;
    }
    if (!parent.has(key)) {
        parent.section(key);
        return;
    }
    Reader r = parent.section(key);
    Rect rect = out.value_or(Rect{});
    r.get("row0", rect.row0);
    r.get("col0", rect.col0);
    r.get("rows", rect.rows);
    r.get("cols", rect.cols);
    r.finish();
    r.check([&] {
        if (rect.row0 < 0 || rect.col0 < 0 || rect.rows <= 0 || rect.cols <= 0) fail("rectangle must be non-empty and non-negative");
    });
    out = rect;
}

PipelineConfig read_config(const YAML::Node& root, const Context& ctx) {
    PipelineConfig cfg;
    Reader top(root, "", ctx);

    read_phantom(top.section("phantom"), cfg.phantom);
    {
        Reader r = top.section("preprocess");
        r.get("bandpass", cfg.preprocess.bandpass);
        r.get("fractional_bandwidth", cfg.preprocess.fractional_bandwidth);
        r.get("lateral_sigma_mm", cfg.preprocess.lateral_sigma_mm);
        r.get("normalize", cfg.preprocess.normalize);
        r.finish();
        r.check([&] { cfg.preprocess.validate(); });
    }
    {
        Reader r = top.section("coarse");
        r.get("levels", cfg.coarse.levels);
        r.get_extent("block", cfg.coarse.block);
        r.get_extent("search", cfg.coarse.search);
        r.get_extent("rf_search", cfg.coarse.rf_search);
        r.get("min_correlation", cfg.coarse.min_correlation);
        r.get("median_window", cfg.coarse.median_window);
        std::optional<std::string> flow;
        if (cfg.external_flow) flow = cfg.external_flow->string();
        r.get("external_flow", flow);
        if (flow) cfg.external_flow = *flow;
        r.finish();
        r.check([&] { cfg.coarse.validate(); });
    }
    {
        Reader r = top.section("glue");
        r.get("alpha_axial", cfg.glue.alpha_axial);
        r.get("alpha_lateral", cfg.glue.alpha_lateral);
        r.get("beta_axial", cfg.glue.beta_axial);
        r.get("beta_lateral", cfg.glue.beta_lateral);
        r.get("outer_iterations", cfg.glue.outer_iterations);
        r.get("solver_tolerance", cfg.glue.solver_tolerance);
        r.get("solver_max_iters", cfg.glue.solver_max_iters);
        r.finish();
        r.check([&] { cfg.glue.validate(); });
    }
    {
        Reader r = top.section("strain");
        r.get("window_len", cfg.strain.params.window_len);
        r.get("compression_positive", cfg.strain.params.compression_positive);
        r.get("display_min", cfg.strain.display_min);
        r.get("display_max", cfg.strain.display_max);
        r.finish();
        r.check([&] {
            cfg.strain.params.validate();
            if (cfg.strain.display_min && cfg.strain.display_max && !(*cfg.strain.display_max > *cfg.strain.display_min)) {
                fail("display_max must exceed display_min");
            }
        });
    }
    {
        Reader r = top.section("metrics");
        read_rect(r, "target", cfg.metrics.target);
        read_rect(r, "background", cfg.metrics.background);
        r.get_list("sweep", cfg.metrics.sweep);
        r.get("success_cnr", cfg.metrics.success_cnr);
        {
            Reader m = r.section("mssim");
            m.get("window", cfg.metrics.mssim.window);
            m.get("k1", cfg.metrics.mssim.k1);
            m.get("k2", cfg.metrics.mssim.k2);
            m.get("dynamic_range", cfg.metrics.mssim.dynamic_range);
            m.finish();
            m.check([&] {
                if (cfg.metrics.mssim.window < 1 || !(cfg.metrics.mssim.k1 > 0.0) || !(cfg.metrics.mssim.k2 > 0.0)) {
                    fail("mssim window must be >= 1 and k1, k2 > 0");
                }
                if (cfg.metrics.mssim.dynamic_range && !(*cfg.metrics.mssim.dynamic_range > 0.0)) {
                    fail("mssim dynamic_range must be > 0");
                }
            });
        }
        r.finish();
        r.check([&] {
            for (double e : cfg.metrics.sweep) {
                if (!(e >= 0.0 && e <= 0.10)) fail("sweep strains must lie in [0, 0.10]");
            }
            if (!std::isfinite(cfg.metrics.success_cnr)) fail("success_cnr must be finite");
        });
    }
    {
        std::string out = cfg.output.string();
        top.get("output", out);
        if (out.empty()) fail(top.where() + ": 'output' must not be empty");
        cfg.output = out;
    }
    top.finish();
    return cfg;
}

void apply_override(YAML::Node& root, const std::string& spec, Context& ctx) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) fail("--set " + spec + ": expected section.key=value");
    const std::string path = spec.substr(0, eq);
    YAML::Node value;
    try {
        value = YAML::Load(spec.substr(eq + 1));
    } catch (const YAML::Exception& e) {
        fail("--set " + path + ": cannot parse value: " + e.msg);
    }
    YAML::Node node = root;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) fail("--set " + path + ": empty key component");
        if (!node.IsMap() && !node.IsNull()) fail("--set " + path + ": '" + path.substr(0, start ? start - 1 : 0) + "' is not a section");
        if (dot == std::string::npos) {
            node[key] = value;
            break;
        }
        YAML::Node next = node[key];
        if (!next || next.IsNull()) node[key] = YAML::Node(YAML::NodeType::Map);
        node.reset(node[key]);
        start = dot + 1;
    }
    ctx.overridden.insert(path);
}

// Shortest representation that reads back to the same double.
std::string num(double v) {
    if (std::isinf(v)) return v > 0 ? ".inf" : "-.inf";
    if (std::isnan(v)) return ".nan";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    std::string s(buf, res.ptr);
    if (s.find_first_of(".en") == std::string::npos) s += ".0";
    return s;
}

template <class T>
std::string opt(const std::optional<T>& v) {
    if (!v) return "null";
    if constexpr (std::is_floating_point_v<T>) return num(*v);
    else return *v;
}

std::string rect(const std::optional<Rect>& r) {
    if (!r) return "null";
    return "{row0: " + std::to_string(r->row0) + ", col0: " + std::to_string(r->col0) +
           ", rows: " + std::to_string(r->rows) + ", cols: " + std::to_string(r->cols) + "}";
}

std::string extent(const Extent& e) { return "[" + std::to_string(e.axial) + ", " + std::to_string(e.lateral) + "]"; }

std::string quoted(const std::string& s) {
    YAML::Emitter e;
    e << YAML::DoubleQuoted << s;
    return e.c_str();
}

const char* yes_no(bool b) { return b ? "true" : "false"; }

}  // namespace

void PipelineConfig::validate() const {
    if (coarse.block.axial > phantom.acquisition.samples || coarse.block.lateral > phantom.acquisition.lines) {
        fail("coarse.block is larger than the acquisition grid");
    }
    if (strain.params.window_len > phantom.acquisition.samples) fail("strain.window_len exceeds acquisition samples");
}

PipelineConfig parse_config(const std::string& text, const std::string& source,
                            const std::vector<std::string>& overrides) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        fail(source + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) + ": " + e.msg);
    }
    if (root.IsNull() || !root) root = YAML::Node(YAML::NodeType::Map);
    if (!root.IsMap()) fail(source + ": top level must be a mapping");
    Context ctx{source, {}};
    for (const auto& o : overrides) apply_override(root, o, ctx);
    PipelineConfig config = read_config(root, ctx);
    config.validate();
    return config;
}

PipelineConfig load_config(const std::optional<std::filesystem::path>& path, const std::vector<std::string>& overrides) {
    if (!path) return parse_config("", "<defaults>", overrides);
    std::ifstream in(*path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open config " + path->string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path->string(), overrides);
}

void write_config(const PipelineConfig& c, std::ostream& out) {
    const PhantomSection& p = c.phantom;
    const AcquisitionConfig& a = p.acquisition;
    out << "phantom:\n"
        << "  scene:\n"
        << "    depth_mm: " << num(p.scene.depth_mm) << '\n'
        << "    width_mm: " << num(p.scene.width_mm) << '\n'
        << "    density_per_mm2: " << num(p.scene.density_per_mm2) << '\n';
    if (p.scene.inclusion) {
        const Inclusion& i = *p.scene.inclusion;
        out << "    inclusion:\n"
            << "      center_axial_mm: " << num(i.center_axial_mm) << '\n'
            << "      center_lateral_mm: " << num(i.center_lateral_mm) << '\n'
            << "      radius_mm: " << num(i.radius_mm) << '\n'
            << "      stiffness_ratio: " << num(i.stiffness_ratio) << '\n';
    } else {
        out << "    inclusion: null\n";
    }
    out << "  deformation:\n"
        << "    applied_strain: " << num(p.applied_strain) << '\n'
        << "    poisson_ratio: " << num(p.poisson_ratio) << '\n'
        << "    transition_mm: " << num(p.transition_mm) << '\n'
        << "  acquisition:\n"
        << "    center_frequency_hz: " << num(a.center_frequency) << '\n'
        << "    sampling_rate_hz: " << num(a.sampling_rate) << '\n'
        << "    sound_speed_m_s: " << num(a.sound_speed) << '\n'
        << "    samples: " << a.samples << '\n'
        << "    lines: " << a.lines << '\n'
        << "    lateral_pitch_mm: " << num(a.lateral_pitch_mm) << '\n'
        << "    start_depth_mm: " << opt(a.start_depth_mm) << '\n'
        << "    lateral_origin_mm: " << opt(a.lateral_origin_mm) << '\n'
        << "    sigma_axial_mm: " << num(a.sigma_axial_mm) << '\n'
        << "    sigma_lateral_mm: " << num(a.sigma_lateral_mm) << '\n'
        << "    psf_truncation: " << num(a.psf_truncation) << '\n'
        << "  noise:\n"
        << "    psnr_db: " << num(p.psnr_db) << '\n'
        << "  seeds:\n"
        << "    scene: " << p.scene_seed << '\n'
        << "    noise: " << p.noise_seed << '\n';

    out << "preprocess:\n"
        << "  bandpass: " << yes_no(c.preprocess.bandpass) << '\n'
        << "  fractional_bandwidth: " << num(c.preprocess.fractional_bandwidth) << '\n'
        << "  lateral_sigma_mm: " << num(c.preprocess.lateral_sigma_mm) << '\n'
        << "  normalize: " << yes_no(c.preprocess.normalize) << '\n';

    out << "coarse:\n"
        << "  levels: " << c.coarse.levels << '\n'
        << "  block: " << extent(c.coarse.block) << '\n'
        << "  search: " << extent(c.coarse.search) << '\n'
        << "  rf_search: " << extent(c.coarse.rf_search) << '\n'
        << "  min_correlation: " << num(c.coarse.min_correlation) << '\n'
        << "  median_window: " << c.coarse.median_window << '\n'
        << "  external_flow: " << (c.external_flow ? quoted(c.external_flow->string()) : "null") << '\n';

    out << "glue:\n"
        << "  alpha_axial: " << num(c.glue.alpha_axial) << '\n'
        << "  alpha_lateral: " << num(c.glue.alpha_lateral) << '\n'
        << "  beta_axial: " << num(c.glue.beta_axial) << '\n'
        << "  beta_lateral: " << num(c.glue.beta_lateral) << '\n'
        << "  outer_iterations: " << c.glue.outer_iterations << '\n'
        << "  solver_tolerance: " << num(c.glue.solver_tolerance) << '\n'
        << "  solver_max_iters: " << c.glue.solver_max_iters << '\n';

    out << "strain:\n"
        << "  window_len: " << c.strain.params.window_len << '\n'
        << "  compression_positive: " << yes_no(c.strain.params.compression_positive) << '\n'
        << "  display_min: " << opt(c.strain.display_min) << '\n'
        << "  display_max: " << opt(c.strain.display_max) << '\n';

    out << "metrics:\n"
        << "  target: " << rect(c.metrics.target) << '\n'
        << "  background: " << rect(c.metrics.background) << '\n'
        << "  sweep: [";
    for (std::size_t k = 0; k < c.metrics.sweep.size(); ++k) out << (k ? ", " : "") << num(c.metrics.sweep[k]);
    out << "]\n"
        << "  success_cnr: " << num(c.metrics.success_cnr) << '\n'
        << "  mssim:\n"
        << "    window: " << c.metrics.mssim.window << '\n'
        << "    k1: " << num(c.metrics.mssim.k1) << '\n'
        << "    k2: " << num(c.metrics.mssim.k2) << '\n'
        << "    dynamic_range: " << opt(c.metrics.mssim.dynamic_range) << '\n';

    out << "output: " << quoted(c.output.string()) << '\n';
}

std::string config_text(const PipelineConfig& config) {
    std::ostringstream out;
    write_config(config, out);
    return out.str();
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace elasto
