#include "diffsr/image_io.hpp"

#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include <png.h>

#include "diffsr/error.hpp"

namespace diffsr {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace

ImageTensor load_image(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp)
        fail(ErrorCategory::io, "cannot open image for reading: " + path.string());

    png_byte header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8) != 0)
        fail(ErrorCategory::format, "not a PNG file: " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCategory::io, "libpng initialization failed");
    }

    std::vector<png_bytep> row_ptrs;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCategory::format, "corrupt PNG: " + path.string());
    }

    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);

    if (bit_depth != 8 || (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_RGB)) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCategory::format,
             "unsupported PNG (need 8-bit gray or RGB): " + path.string());
    }
    const int channels = color_type == PNG_COLOR_TYPE_GRAY ? 1 : 3;

    std::vector<png_byte> pixels(static_cast<std::size_t>(w) * h * channels);
    row_ptrs.resize(h);
    for (png_uint_32 y = 0; y < h; ++y)
        row_ptrs[y] = pixels.data() + static_cast<std::size_t>(y) * w * channels;
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    ImageTensor img(channels, static_cast<int>(h), static_cast<int>(w), ValueRange::Unit);
    for (int c = 0; c < channels; ++c)
        for (png_uint_32 y = 0; y < h; ++y)
            for (png_uint_32 x = 0; x < w; ++x)
                img.at(c, y, x) =
                    pixels[(static_cast<std::size_t>(y) * w + x) * channels + c] / 255.0;
    return img;
}

void save_image(const ImageTensor& img, const std::filesystem::path& path) {
    if (img.channels != 1 && img.channels != 3)
        fail(ErrorCategory::shape, "save_image supports 1 or 3 channels");

    // Convert to unit range, clamp, quantize.
    const int c_n = img.channels, h = img.height, w = img.width;
    std::vector<png_byte> pixels(static_cast<std::size_t>(w) * h * c_n);
    for (int c = 0; c < c_n; ++c) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double v = img.at(c, y, x);
                if (img.range == ValueRange::Signed) v = (v + 1.0) / 2.0;
                v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
                pixels[(static_cast<std::size_t>(y) * w + x) * c_n + c] =
                    static_cast<png_byte>(std::lround(v * 255.0));
            }
        }
    }

    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp)
        fail(ErrorCategory::io, "cannot open image for writing: " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorCategory::io, "libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorCategory::io, "PNG write failed: " + path.string());
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, w, h, 8,
                 c_n == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    // Pin encoder knobs so output bytes are a pure function of the pixels.
    png_set_compression_level(png, 6);
    png_set_filter(png, 0, PNG_FILTER_NONE);
    png_write_info(png, info);
    for (int y = 0; y < h; ++y)
        png_write_row(png, pixels.data() + static_cast<std::size_t>(y) * w * c_n);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace diffsr
