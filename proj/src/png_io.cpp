#include "bovi/png_io.hpp"

#include "bovi/errors.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <vector>

namespace bovi::png {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Decodes to 8-bit interleaved RGB rows regardless of source format.
std::vector<std::vector<png_byte>> read_rgb_rows(const std::filesystem::path& path,
                                                 png_uint_32& width, png_uint_32& height) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open " + path.string());

    png_structp png_ptr =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png_ptr) throw IoError("libpng init failed");
    png_infop info_ptr = png_create_info_struct(png_ptr);
    if (!info_ptr) {
        png_destroy_read_struct(&png_ptr, nullptr, nullptr);
        throw IoError("libpng init failed");
    }

    std::vector<std::vector<png_byte>> rows;
    if (setjmp(png_jmpbuf(png_ptr))) {
        png_destroy_read_struct(&png_ptr, &info_ptr, nullptr);
        throw IoError("failed to decode " + path.string());
    }

    png_init_io(png_ptr, fp.get());
    png_read_info(png_ptr, info_ptr);

    width = png_get_image_width(png_ptr, info_ptr);
    height = png_get_image_height(png_ptr, info_ptr);
    png_byte color_type = png_get_color_type(png_ptr, info_ptr);
    png_byte bit_depth = png_get_bit_depth(png_ptr, info_ptr);

    if (bit_depth == 16) png_set_strip_16(png_ptr);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png_ptr);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
        png_set_expand_gray_1_2_4_to_8(png_ptr);
    if (png_get_valid(png_ptr, info_ptr, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png_ptr);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png_ptr);
    png_set_strip_alpha(png_ptr);
    png_read_update_info(png_ptr, info_ptr);

    rows.assign(height, std::vector<png_byte>(png_get_rowbytes(png_ptr, info_ptr)));
    std::vector<png_bytep> row_ptrs(height);
    for (png_uint_32 y = 0; y < height; ++y) row_ptrs[y] = rows[y].data();
    png_read_image(png_ptr, row_ptrs.data());
    png_read_end(png_ptr, nullptr);
    png_destroy_read_struct(&png_ptr, &info_ptr, nullptr);
    return rows;
}

void write_rows(const std::filesystem::path& path, png_uint_32 width, png_uint_32 height,
                int color_type, std::vector<png_bytep>& row_ptrs) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot write " + path.string());

    png_structp png_ptr =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png_ptr) throw IoError("libpng init failed");
    png_infop info_ptr = png_create_info_struct(png_ptr);
    if (!info_ptr) {
        png_destroy_write_struct(&png_ptr, nullptr);
        throw IoError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png_ptr))) {
        png_destroy_write_struct(&png_ptr, &info_ptr);
        throw IoError("failed to encode " + path.string());
    }

    png_init_io(png_ptr, fp.get());
    png_set_IHDR(png_ptr, info_ptr, width, height, 8, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png_ptr, info_ptr);
    png_write_image(png_ptr, row_ptrs.data());
    png_write_end(png_ptr, nullptr);
    png_destroy_write_struct(&png_ptr, &info_ptr);
}

} // namespace

ColorImage read_rgb8(const std::filesystem::path& path) {
    png_uint_32 w = 0, h = 0;
    auto rows = read_rgb_rows(path, w, h);

    ColorImage img;
    img.r.resize(h, w);
    img.g.resize(h, w);
    img.b.resize(h, w);
    for (png_uint_32 y = 0; y < h; ++y) {
        const png_byte* row = rows[y].data();
        for (png_uint_32 x = 0; x < w; ++x) {
            img.r(y, x) = row[3 * x + 0];
            img.g(y, x) = row[3 * x + 1];
            img.b(y, x) = row[3 * x + 2];
        }
    }
    return img;
}

void write_rgb8(const std::filesystem::path& path, const ColorImage& img) {
    const auto h = static_cast<png_uint_32>(img.rows());
    const auto w = static_cast<png_uint_32>(img.cols());
    std::vector<std::vector<png_byte>> rows(h, std::vector<png_byte>(3 * w));
    std::vector<png_bytep> row_ptrs(h);
    for (png_uint_32 y = 0; y < h; ++y) {
        for (png_uint_32 x = 0; x < w; ++x) {
            rows[y][3 * x + 0] = img.r(y, x);
            rows[y][3 * x + 1] = img.g(y, x);
            rows[y][3 * x + 2] = img.b(y, x);
        }
        row_ptrs[y] = rows[y].data();
    }
    write_rows(path, w, h, PNG_COLOR_TYPE_RGB, row_ptrs);
}

Grid<std::uint8_t> read_gray8(const std::filesystem::path& path) {
    png_uint_32 w = 0, h = 0;
    auto rows = read_rgb_rows(path, w, h);
    Grid<std::uint8_t> img(h, w);
    for (png_uint_32 y = 0; y < h; ++y)
        for (png_uint_32 x = 0; x < w; ++x) {
            const png_byte* p = rows[y].data() + 3 * x;
            img(y, x) = static_cast<std::uint8_t>((p[0] + p[1] + p[2]) / 3);
        }
    return img;
}

void write_gray8(const std::filesystem::path& path, const Grid<std::uint8_t>& img) {
    const auto h = static_cast<png_uint_32>(img.rows());
    const auto w = static_cast<png_uint_32>(img.cols());
    std::vector<std::vector<png_byte>> rows(h, std::vector<png_byte>(w));
    std::vector<png_bytep> row_ptrs(h);
    for (png_uint_32 y = 0; y < h; ++y) {
        for (png_uint_32 x = 0; x < w; ++x) rows[y][x] = img(y, x);
        row_ptrs[y] = rows[y].data();
    }
    write_rows(path, w, h, PNG_COLOR_TYPE_GRAY, row_ptrs);
}

} // namespace bovi::png
