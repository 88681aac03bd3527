#pragma once

#include <filesystem>
#include <iosfwd>

#include <Eigen/Core>

#include "elasto/error.hpp"

namespace elasto {

using Index = Eigen::Index;

/// Grid extent: rows are axial samples, columns are lateral scan lines.
struct GridDims {
    Index rows = 0;
    Index cols = 0;

    friend bool operator==(const GridDims&, const GridDims&) = default;
};

/// Acquisition metadata carried in the ELRF header.
struct FrameMetadata {
    double sampling_rate = 40.0e6;       // Hz
    double center_frequency = 6.67e6;    // Hz
    double axial_spacing = 0.01925;      // mm per sample (c / 2 fs at 1540 m/s)
    double lateral_spacing = 0.3;        // mm per line

    friend bool operator==(const FrameMetadata&, const FrameMetadata&) = default;
};

/// One RF acquisition. Samples are stored as float so that the on-disk
/// representation round-trips bit-exactly. Column j is scan line j.
class RfFrame {
public:
    RfFrame(Eigen::MatrixXf samples, FrameMetadata meta);

    const Eigen::MatrixXf& samples() const noexcept { return samples_; }
    const FrameMetadata& metadata() const noexcept { return meta_; }
    Index rows() const noexcept { return samples_.rows(); }
    Index cols() const noexcept { return samples_.cols(); }
    GridDims dims() const noexcept { return {rows(), cols()}; }

    friend bool operator==(const RfFrame& a, const RfFrame& b) {
        return a.meta_ == b.meta_ && a.samples_.rows() == b.samples_.rows() &&
               a.samples_.cols() == b.samples_.cols() && a.samples_ == b.samples_;
    }

private:
    Eigen::MatrixXf samples_;
    FrameMetadata meta_;
};

/// Per-sample displacement. Axial in samples, lateral in lines.
struct DisplacementField {
    Eigen::MatrixXd axial;
    Eigen::MatrixXd lateral;

    DisplacementField() = default;
    DisplacementField(Eigen::MatrixXd axial_, Eigen::MatrixXd lateral_);

    static DisplacementField zeros(GridDims dims);
    static DisplacementField constant(GridDims dims, double axial_value, double lateral_value);

    GridDims dims() const noexcept { return {axial.rows(), axial.cols()}; }

    /// Throws DimensionMismatch or NonFiniteData.
    void validate() const;
};

/// Axial strain image; dims equal the displacement field it came from.
struct StrainImage {
    Eigen::MatrixXd values;
    int window_len = 0;

    GridDims dims() const noexcept { return {values.rows(), values.cols()}; }
};

enum class FileFormat { Binary, Csv };

/// Infers the format from the extension: ".csv" is CSV, everything else binary.
FileFormat format_for(const std::filesystem::path& path);

// ELRF / ELDF file I/O. Byte layout is documented in docs/file_formats.md.
RfFrame load_frame(const std::filesystem::path& path, FileFormat format,
                   const FrameMetadata& csv_metadata = {});
void save_frame(const RfFrame& frame, const std::filesystem::path& path, FileFormat format);

DisplacementField load_field(const std::filesystem::path& path, FileFormat format);
void save_field(const DisplacementField& field, const std::filesystem::path& path,
                FileFormat format);

RfFrame read_frame(std::istream& in);
void write_frame(const RfFrame& frame, std::ostream& out);
DisplacementField read_field(std::istream& in);
void write_field(const DisplacementField& field, std::ostream& out);

/// Bilinear resampling onto `dst` with corner alignment. The axial component is
/// rescaled by dst.rows / src.rows and the lateral one by dst.cols / src.cols so
/// that values stay in destination-grid units.
DisplacementField resample_field(const DisplacementField& field, GridDims dst);

/// Bilinear interpolation of `values` at fractional (row, col), clamped to the grid.
double sample_bilinear(const Eigen::MatrixXd& values, double row, double col);

}  // namespace elasto
