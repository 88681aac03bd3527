#include "elasto/rf_core.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace elasto {

namespace {

constexpr std::array<char, 4> kFrameMagic{'E', 'L', 'R', 'F'};
constexpr std::array<char, 4> kFieldMagic{'E', 'L', 'D', 'F'};
constexpr std::uint8_t kVersion = 1;

template <typename T>
T to_little(T value) {
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    } else {
        return value;
    }
}

template <typename T>
void put(std::ostream& out, T value) {
    const auto le = to_little(value);
    out.write(reinterpret_cast<const char*>(&le), sizeof(T));
}

template <typename T>
T get(std::istream& in, const char* what) {
    T raw{};
    in.read(reinterpret_cast<char*>(&raw), sizeof(T));
    if (in.gcount() != static_cast<std::streamsize>(sizeof(T))) {
        throw Error(ErrorCode::MalformedHeader, std::string("truncated header at ") + what);
    }
    return to_little(raw);
}

void write_preamble(std::ostream& out, const std::array<char, 4>& magic, GridDims dims) {
    out.write(magic.data(), magic.size());
    put<std::uint8_t>(out, kVersion);
    const char reserved[3] = {0, 0, 0};
    out.write(reserved, 3);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(dims.rows));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(dims.cols));
}

GridDims read_preamble(std::istream& in, const std::array<char, 4>& magic) {
    std::array<char, 4> found{};
    in.read(found.data(), found.size());
    if (in.gcount() != 4 || found != magic) {
        throw Error(ErrorCode::MalformedHeader,
                    "bad magic, expected " + std::string(magic.begin(), magic.end()));
    }
    const auto version = get<std::uint8_t>(in, "version");
    if (version != kVersion) {
        throw Error(ErrorCode::MalformedHeader, "unsupported version " + std::to_string(version));
    }
    char reserved[3];
    in.read(reserved, 3);
    if (in.gcount() != 3) throw Error(ErrorCode::MalformedHeader, "truncated header");
    const auto rows = get<std::uint32_t>(in, "rows");
    const auto cols = get<std::uint32_t>(in, "cols");
    if (rows < 2 || cols < 2) {
        throw Error(ErrorCode::DimensionMismatch,
                    "dims " + std::to_string(rows) + "x" + std::to_string(cols) + " below 2x2");
    }
    return {static_cast<Index>(rows), static_cast<Index>(cols)};
}

// Payload is row-major: element (i, j) at offset i * cols + j.
template <typename Matrix>
void write_plane(std::ostream& out, const Matrix& m) {
    std::vector<float> row(static_cast<std::size_t>(m.cols()));
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) row[j] = to_little(static_cast<float>(m(i, j)));
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
}

Eigen::MatrixXf read_plane(std::istream& in, GridDims dims) {
    const auto count = static_cast<std::size_t>(dims.rows * dims.cols);
    std::vector<float> raw(count);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(count * sizeof(float))) {
        throw Error(ErrorCode::DimensionMismatch, "payload shorter than header dims");
    }
    Eigen::MatrixXf m(dims.rows, dims.cols);
    for (Index i = 0; i < dims.rows; ++i) {
        for (Index j = 0; j < dims.cols; ++j) {
            const float v = to_little(raw[static_cast<std::size_t>(i * dims.cols + j)]);
            if (!std::isfinite(v)) {
                throw Error(ErrorCode::NonFiniteData,
                            "non-finite value at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
            }
            m(i, j) = v;
        }
    }
    return m;
}

void expect_eof(std::istream& in) {
    if (in.peek() != std::char_traits<char>::eof()) {
        throw Error(ErrorCode::DimensionMismatch, "trailing bytes after payload");
    }
}

void validate_metadata(const FrameMetadata& meta, ErrorCode code) {
    const bool ok = std::isfinite(meta.sampling_rate) && std::isfinite(meta.center_frequency) &&
                    meta.center_frequency > 0.0 && meta.sampling_rate > 2.0 * meta.center_frequency &&
                    std::isfinite(meta.axial_spacing) && meta.axial_spacing > 0.0 &&
                    std::isfinite(meta.lateral_spacing) && meta.lateral_spacing > 0.0;
    if (!ok) throw Error(code, "invalid acquisition metadata (need fs > 2 fc, positive spacings)");
}

std::vector<std::vector<double>> parse_csv(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t start = 0;
        while (start <= line.size()) {
            auto end = line.find(',', start);
            if (end == std::string::npos) end = line.size();
            std::string_view token(line.data() + start, end - start);
            while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
            while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
            double value = 0.0;
            const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
            if (ec != std::errc{} || ptr != token.data() + token.size() || token.empty()) {
                throw Error(ErrorCode::MalformedHeader,
                            "unparseable CSV token on line " + std::to_string(line_no));
            }
            if (!std::isfinite(value)) {
                throw Error(ErrorCode::NonFiniteData, "non-finite CSV value on line " + std::to_string(line_no));
            }
            row.push_back(value);
            start = end + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw Error(ErrorCode::DimensionMismatch, "ragged CSV row " + std::to_string(line_no));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

template <typename Matrix>
void write_csv_plane(std::ostream& out, const Matrix& m) {
    char buf[32];
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            // Enough digits that float and double values reparse exactly.
            const int len = std::snprintf(buf, sizeof(buf), "%.17g", static_cast<double>(m(i, j)));
            if (j) out.put(',');
            out.write(buf, len);
        }
        out.put('\n');
    }
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace

RfFrame::RfFrame(Eigen::MatrixXf samples, FrameMetadata meta)
    : samples_(std::move(samples)), meta_(meta) {
    if (samples_.rows() < 2 || samples_.cols() < 2) {
        throw Error(ErrorCode::DimensionMismatch, "RF frame must be at least 2x2");
    }
    if (!samples_.allFinite()) throw Error(ErrorCode::NonFiniteData, "RF frame contains non-finite samples");
    validate_metadata(meta_, ErrorCode::InvalidArgument);
}

DisplacementField::DisplacementField(Eigen::MatrixXd axial_, Eigen::MatrixXd lateral_)
    : axial(std::move(axial_)), lateral(std::move(lateral_)) {
    validate();
}

DisplacementField DisplacementField::zeros(GridDims dims) {
    return constant(dims, 0.0, 0.0);
}

DisplacementField DisplacementField::constant(GridDims dims, double axial_value, double lateral_value) {
    return {Eigen::MatrixXd::Constant(dims.rows, dims.cols, axial_value),
            Eigen::MatrixXd::Constant(dims.rows, dims.cols, lateral_value)};
}

void DisplacementField::validate() const {
    if (axial.rows() != lateral.rows() || axial.cols() != lateral.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "axial and lateral planes differ in size");
    }
    if (!axial.allFinite() || !lateral.allFinite()) {
        throw Error(ErrorCode::NonFiniteData, "displacement field contains non-finite entries");
    }
}

FileFormat format_for(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".csv" ? FileFormat::Csv : FileFormat::Binary;
}

void write_frame(const RfFrame& frame, std::ostream& out) {
    write_preamble(out, kFrameMagic, frame.dims());
    const auto& meta = frame.metadata();
    put<double>(out, meta.sampling_rate);
    put<double>(out, meta.center_frequency);
    put<double>(out, meta.axial_spacing);
    put<double>(out, meta.lateral_spacing);
    write_plane(out, frame.samples());
}

RfFrame read_frame(std::istream& in) {
    const auto dims = read_preamble(in, kFrameMagic);
    FrameMetadata meta;
    meta.sampling_rate = get<double>(in, "sampling_rate");
    meta.center_frequency = get<double>(in, "center_frequency");
    meta.axial_spacing = get<double>(in, "axial_spacing");
    meta.lateral_spacing = get<double>(in, "lateral_spacing");
    validate_metadata(meta, ErrorCode::MalformedHeader);
    auto samples = read_plane(in, dims);
    expect_eof(in);
    return RfFrame(std::move(samples), meta);
}

void write_field(const DisplacementField& field, std::ostream& out) {
    field.validate();
    write_preamble(out, kFieldMagic, field.dims());
    write_plane(out, field.axial);
    write_plane(out, field.lateral);
}

DisplacementField read_field(std::istream& in) {
    const auto dims = read_preamble(in, kFieldMagic);
    Eigen::MatrixXd axial = read_plane(in, dims).cast<double>();
    Eigen::MatrixXd lateral = read_plane(in, dims).cast<double>();
    expect_eof(in);
    return {std::move(axial), std::move(lateral)};
}

RfFrame load_frame(const std::filesystem::path& path, FileFormat format,
                   const FrameMetadata& csv_metadata) {
    auto in = open_in(path);
    if (format == FileFormat::Binary) return read_frame(in);

    const auto rows = parse_csv(in);
    if (rows.size() < 2 || rows.front().size() < 2) {
        throw Error(ErrorCode::DimensionMismatch, "CSV frame must be at least 2x2");
    }
    Eigen::MatrixXf samples(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < samples.rows(); ++i) {
        for (Index j = 0; j < samples.cols(); ++j) samples(i, j) = static_cast<float>(rows[i][j]);
    }
    return RfFrame(std::move(samples), csv_metadata);
}

void save_frame(const RfFrame& frame, const std::filesystem::path& path, FileFormat format) {
    auto out = open_out(path);
    if (format == FileFormat::Binary) {
        write_frame(frame, out);
    } else {
        write_csv_plane(out, frame.samples());
    }
    finish(out, path);
}

DisplacementField load_field(const std::filesystem::path& path, FileFormat format) {
    auto in = open_in(path);
    if (format == FileFormat::Binary) return read_field(in);

    // CSV field: axial plane rows followed by lateral plane rows.
    const auto rows = parse_csv(in);
    if (rows.size() < 4 || rows.size() % 2 != 0 || rows.front().size() < 2) {
        throw Error(ErrorCode::DimensionMismatch, "CSV field needs 2m rows of n >= 2 values");
    }
    const auto m = static_cast<Index>(rows.size() / 2);
    const auto n = static_cast<Index>(rows.front().size());
    Eigen::MatrixXd axial(m, n), lateral(m, n);
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < n; ++j) {
            axial(i, j) = rows[i][j];
            lateral(i, j) = rows[i + m][j];
        }
    }
    return {std::move(axial), std::move(lateral)};
}

void save_field(const DisplacementField& field, const std::filesystem::path& path, FileFormat format) {
    auto out = open_out(path);
    if (format == FileFormat::Binary) {
        write_field(field, out);
    } else {
        field.validate();
        write_csv_plane(out, field.axial);
        write_csv_plane(out, field.lateral);
    }
    finish(out, path);
}

double sample_bilinear(const Eigen::MatrixXd& values, double row, double col) {
    const Index m = values.rows();
    const Index n = values.cols();
    row = std::clamp(row, 0.0, static_cast<double>(m - 1));
    col = std::clamp(col, 0.0, static_cast<double>(n - 1));
    const Index i0 = std::min<Index>(static_cast<Index>(row), std::max<Index>(m - 2, 0));
    const Index j0 = std::min<Index>(static_cast<Index>(col), std::max<Index>(n - 2, 0));
    const Index i1 = std::min<Index>(i0 + 1, m - 1);
    const Index j1 = std::min<Index>(j0 + 1, n - 1);
    const double fr = row - static_cast<double>(i0);
    const double fc = col - static_cast<double>(j0);
    const double top = (1.0 - fc) * values(i0, j0) + fc * values(i0, j1);
    const double bottom = (1.0 - fc) * values(i1, j0) + fc * values(i1, j1);
    return (1.0 - fr) * top + fr * bottom;
}

DisplacementField resample_field(const DisplacementField& field, GridDims dst) {
    field.validate();
    const GridDims src = field.dims();
    if (src.rows < 2 || src.cols < 2 || dst.rows < 2 || dst.cols < 2) {
        throw Error(ErrorCode::InvalidArgument, "resample_field needs all dims >= 2");
    }
    if (src == dst) return field;

    const double row_step = static_cast<double>(src.rows - 1) / static_cast<double>(dst.rows - 1);
    const double col_step = static_cast<double>(src.cols - 1) / static_cast<double>(dst.cols - 1);
    const double axial_scale = static_cast<double>(dst.rows) / static_cast<double>(src.rows);
    const double lateral_scale = static_cast<double>(dst.cols) / static_cast<double>(src.cols);

    DisplacementField out = DisplacementField::zeros(dst);
    for (Index j = 0; j < dst.cols; ++j) {
        const double c = static_cast<double>(j) * col_step;
        for (Index i = 0; i < dst.rows; ++i) {
            const double r = static_cast<double>(i) * row_step;
            out.axial(i, j) = axial_scale * sample_bilinear(field.axial, r, c);
            out.lateral(i, j) = lateral_scale * sample_bilinear(field.lateral, r, c);
        }
    }
    return out;
}

}  // namespace elasto
