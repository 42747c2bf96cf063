#include "flowpix/png_io.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <memory>

#include "flowpix/error.hpp"

namespace flowpix {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports errors through longjmp; nothing with a destructor may live
// in the frames between setjmp and the libpng calls.
bool write_gray16(std::FILE* file, const std::uint8_t* pixels) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }
    png_init_io(png, file);
    png_set_IHDR(png, info, kCanvasWidth, kCanvasHeight, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t row = 0; row < kCanvasHeight; ++row) {
        png_write_row(png, pixels + row * kCanvasWidth);
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

enum class ReadStatus { ok, libpng_error, wrong_format };

ReadStatus read_gray16(std::FILE* file, std::uint8_t* pixels) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) return ReadStatus::libpng_error;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        return ReadStatus::libpng_error;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        return ReadStatus::libpng_error;
    }
    png_init_io(png, file);
    png_read_info(png, info);
    png_uint_32 width = 0;
    png_uint_32 height = 0;
    int bit_depth = 0;
    int color_type = 0;
    int interlace = 0;
    png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, &interlace, nullptr, nullptr);
    if (width != kCanvasWidth || height != kCanvasHeight || bit_depth != 8 ||
        color_type != PNG_COLOR_TYPE_GRAY || interlace != PNG_INTERLACE_NONE) {
        png_destroy_read_struct(&png, &info, nullptr);
        return ReadStatus::wrong_format;
    }
    for (std::size_t row = 0; row < kCanvasHeight; ++row) {
        png_read_row(png, pixels + row * kCanvasWidth, nullptr);
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return ReadStatus::ok;
}

}  // namespace

void write_png(const PixelGrid& pixels, const std::string& path) {
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw Error(ErrorKind::io, "cannot write " + path);
    if (!write_gray16(file.get(), pixels.data())) {
        throw Error(ErrorKind::io, "PNG encoding failed for " + path);
    }
    if (std::fflush(file.get()) != 0) throw Error(ErrorKind::io, "write failed for " + path);
}

void write_png(const Thumbnail& thumbnail, const std::string& path) {
    write_png(thumbnail.pixels, path);
}

PixelGrid read_png(const std::string& path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw Error(ErrorKind::io, "cannot open " + path);
    PixelGrid pixels{};
    switch (read_gray16(file.get(), pixels.data())) {
        case ReadStatus::ok: return pixels;
        case ReadStatus::wrong_format:
            throw Error(ErrorKind::format, path + " is not an 8-bit grayscale 16x16 PNG");
        case ReadStatus::libpng_error: break;
    }
    throw Error(ErrorKind::format, path + " is not a readable PNG");
}

}  // namespace flowpix
