#include "elasto/strain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <png.h>

#include "elasto/kernels.hpp"

namespace elasto {

void StrainParams::validate() const {
    if (window_len < 3) throw Error(ErrorCode::InvalidArgument, "strain window must be >= 3");
    if (window_len % 2 == 0) throw Error(ErrorCode::EvenWindow, "strain window must be odd");
}

StrainImage least_squares_strain(const DisplacementField& field, const StrainParams& params) {
    params.validate();
    field.validate();
    if (params.window_len > field.axial.rows()) {
        throw Error(ErrorCode::WindowTooLarge, "strain window " + std::to_string(params.window_len) +
                                                   " exceeds " + std::to_string(field.axial.rows()) + " rows");
    }
    StrainImage out;
    out.window_len = params.window_len;
    kernels::lsq_slope_columns(field.axial, params.window_len, out.values);
    if (params.compression_positive) out.values = -out.values;
    return out;
}

void write_strain_png(const StrainImage& strain, const std::filesystem::path& path, double display_min,
                      double display_max) {
    if (!(display_max > display_min)) throw Error(ErrorCode::InvalidArgument, "display range must be increasing");
    const auto rows = static_cast<png_uint_32>(strain.values.rows());
    const auto cols = static_cast<png_uint_32>(strain.values.cols());

    std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!file) throw Error(ErrorCode::Io, "cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorCode::Io, "libpng initialisation failed");
    }
    std::vector<png_byte> row(cols);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorCode::Io, "PNG encoding failed for " + path.string());
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, cols, rows, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const double scale = 255.0 / (display_max - display_min);
    for (png_uint_32 i = 0; i < rows; ++i) {
        for (png_uint_32 j = 0; j < cols; ++j) {
            const double v = std::clamp((strain.values(i, j) - display_min) * scale, 0.0, 255.0);
            row[j] = static_cast<png_byte>(std::lround(v));
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace elasto
