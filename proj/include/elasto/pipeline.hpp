#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "elasto/config.hpp"

namespace elasto {

/// Process exit codes of the command-line tool.
enum class ExitCode : int {
    Ok = 0,
    Internal = 1,
    Usage = 2,
    Config = 3,
    Io = 4,
    Simulate = 10,
    Coarse = 11,
    Refine = 12,
    Strain = 13,
    Evaluate = 14,
};

enum class Stage { Config, Simulate, Coarse, Refine, Strain, Evaluate };

/// Error raised inside a pipeline stage; keeps the library error code.
class StageError : public std::runtime_error {
public:
    StageError(Stage stage, ErrorCode code, const std::string& what);

    Stage stage() const noexcept { return stage_; }
    ErrorCode code() const noexcept { return code_; }
    ExitCode exit_code() const noexcept;

private:
    Stage stage_;
    ErrorCode code_;
};

/// Exit code for an error escaping a stage: I/O and config errors keep their
/// own codes, everything else maps to the stage.
ExitCode exit_code_for(Stage stage, ErrorCode code) noexcept;

struct SimulatedPair {
    RfFrame pre;
    RfFrame post;
    DisplacementField truth;
    double applied_strain = 0.0;
};

/// Phantom, deformation, rendering and noise from the phantom section.
/// Deterministic in the configured seeds.
SimulatedPair simulate_pair(const PipelineConfig& config, double applied_strain);

/// Target and background rectangles: configured ones, else derived from the
/// phantom inclusion (a square of half-side r/2 at its centre, and the same
/// square shifted laterally by 2r toward the wider side). nullopt when neither
/// is available or the derived windows leave the grid.
std::optional<RegionSpec> resolve_regions(const PipelineConfig& config, GridDims dims);

/// Central 60% of the grid in each direction.
Rect central_region(GridDims dims);

struct PairMetrics {
    double mean_central = 0.0;
    std::optional<double> mean_target;
    std::optional<double> mean_background;
    std::optional<double> snr_target;
    std::optional<double> snr_background;
    std::optional<double> cnr;
    std::optional<double> mssim;  // estimated vs ground-truth strain image
    std::optional<double> rmse_coarse;   // displacement RMSE vs truth, samples (both components)
    std::optional<double> rmse_refined;
    bool success = false;  // CNR >= success_cnr with finite background SNR
};

/// Strain metrics, plus the ground-truth comparisons when `truth` is given.
PairMetrics evaluate_pair(const StrainImage& strain, const DisplacementField* truth,
                          const DisplacementField* coarse, const DisplacementField* refined,
                          const PipelineConfig& config);

/// Root-mean-square of the per-sample displacement error vector.
double field_rmse(const DisplacementField& estimate, const DisplacementField& truth);

struct PairResult {
    DisplacementField coarse;
    RefineResult refined;
    StrainImage strain;
    PairMetrics metrics;
};

/// Preprocess, coarse (or the external flow), GLUE, strain and metrics in memory.
PairResult process_pair(const RfFrame& pre, const RfFrame& post, const DisplacementField* truth,
                        const PipelineConfig& config);

/// Stage outputs of one pair on disk.
struct PairPaths {
    std::filesystem::path dir;
    std::filesystem::path pre() const { return dir / "pre.elrf"; }
    std::filesystem::path post() const { return dir / "post.elrf"; }
    std::filesystem::path truth() const { return dir / "truth.eldf"; }
    std::filesystem::path coarse() const { return dir / "coarse.eldf"; }
    std::filesystem::path refined() const { return dir / "refined.eldf"; }
    std::filesystem::path glue_log() const { return dir / "glue_log.txt"; }
    std::filesystem::path strain_bin() const { return dir / "strain.elrf"; }
    std::filesystem::path strain_csv() const { return dir / "strain.csv"; }
    std::filesystem::path strain_png() const { return dir / "strain.png"; }
    std::filesystem::path metrics_txt() const { return dir / "metrics.txt"; }
    std::filesystem::path metrics_csv() const { return dir / "metrics.csv"; }
};

/// One metrics CSV header and row; numbers use a fixed format so that
/// identical inputs give identical bytes.
std::string metrics_csv_header();
std::string metrics_csv_row(const PairMetrics& m);

/// Human-readable report written to metrics.txt.
std::string metrics_report(const PairMetrics& m, const PipelineConfig& config);

/// Applied strains of a sweep, or the single phantom strain.
std::vector<double> sweep_strains(const PipelineConfig& config);
/// Sub-directory name of a sweep case, e.g. "strain_0.010".
std::string sweep_dir_name(double applied_strain);

/// Hex SHA-256 of a file's bytes.
std::string file_sha256(const std::filesystem::path& path);
std::string text_sha256(const std::string& text);

/// Records inputs, seeds and artifact digests, written as manifest.txt.
class Manifest {
public:
    explicit Manifest(std::filesystem::path root) : root_(std::move(root)) {}

    void note(const std::string& key, const std::string& value);
    void input(const std::filesystem::path& path);
    void artifact(const std::filesystem::path& path);
    void merge(const Manifest& other);
    void write() const;

private:
    std::filesystem::path root_;
    std::vector<std::pair<std::string, std::string>> notes_;
    std::vector<std::filesystem::path> inputs_;
    std::vector<std::filesystem::path> artifacts_;
};

// Stage commands. Each reads and writes files under a pair directory and
// records them in `manifest`. They throw StageError.
void run_simulate(const PipelineConfig& config, double applied_strain, const PairPaths& out, Manifest& manifest);
void run_coarse(const PipelineConfig& config, const std::filesystem::path& pre, const std::filesystem::path& post,
                const PairPaths& out, Manifest& manifest);
void run_refine(const PipelineConfig& config, const std::filesystem::path& pre, const std::filesystem::path& post,
                const std::filesystem::path& init, const PairPaths& out, Manifest& manifest);
void run_strain(const PipelineConfig& config, const std::filesystem::path& field, const PairPaths& out,
                Manifest& manifest);
PairMetrics run_evaluate(const PipelineConfig& config, const std::filesystem::path& strain,
                         const std::optional<std::filesystem::path>& truth, const PairPaths& out, Manifest& manifest);

/// Every stage on one pair, persisting each output.
PairMetrics run_pair(const PipelineConfig& config, const std::filesystem::path& pre, const std::filesystem::path& post,
                     const std::optional<std::filesystem::path>& truth, const PairPaths& out, Manifest& manifest);

struct BatchEntry {
    std::string name;
    std::filesystem::path pre;
    std::filesystem::path post;
    std::optional<std::filesystem::path> truth;
};

/// Reads "name,pre,post[,truth]" lines; relative paths resolve against the
/// list's directory. Blank lines and lines starting with '#' are skipped, as is
/// a first line beginning with "name,".
std::vector<BatchEntry> read_pair_list(const std::filesystem::path& path);

struct BatchRow {
    std::string name;
    bool ok = false;
    std::string error;
    PairMetrics metrics;
};

/// Runs every entry concurrently, isolating failures, and writes summary.csv
/// in input order. Returns the rows in input order.
std::vector<BatchRow> run_batch(const PipelineConfig& config, const std::vector<BatchEntry>& entries,
                                Manifest& manifest);

std::string summary_csv(const std::vector<BatchRow>& rows);

}  // namespace elasto
