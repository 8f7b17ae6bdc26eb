#include "visca/image.hpp"

#include <png.h>

#include <algorithm>
#include <fstream>
#include <iterator>

#include "visca/errors.hpp"

namespace visca {

RgbImage::RgbImage(int width, int height, Rgb fill)
    : width_(std::max(width, 0)), height_(std::max(height, 0)),
      pixels_(static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_) * 3) {
    for (std::size_t i = 0; i < pixels_.size(); i += 3) {
        pixels_[i] = fill.r;
        pixels_[i + 1] = fill.g;
        pixels_[i + 2] = fill.b;
    }
}

void RgbImage::fill_rect(const Rect& r, Rgb c) {
    const Rect clipped = clamp_rect(r, width_, height_);
    for (int y = clipped.y; y < clipped.y + clipped.h; ++y) {
        for (int x = clipped.x; x < clipped.x + clipped.w; ++x) {
            set(x, y, c);
        }
    }
}

RgbImage RgbImage::crop(const Rect& r) const {
    const Rect clipped = clamp_rect(r, width_, height_);
    RgbImage out(clipped.w, clipped.h);
    for (int y = 0; y < clipped.h; ++y) {
        const auto* src = &pixels_[offset(clipped.x, clipped.y + y)];
        std::copy(src, src + static_cast<std::size_t>(clipped.w) * 3, &out.pixels_[out.offset(0, y)]);
    }
    return out;
}

Rect clamp_rect(const Rect& r, int width, int height) noexcept {
    const int x0 = std::clamp(r.x, 0, width);
    const int y0 = std::clamp(r.y, 0, height);
    const int x1 = std::clamp(r.x + std::max(r.w, 0), 0, width);
    const int y1 = std::clamp(r.y + std::max(r.h, 0), 0, height);
    return {x0, y0, x1 - x0, y1 - y0};
}

namespace {

RgbImage finish_read(png_image& image, const char* source) {
    image.format = PNG_FORMAT_RGB;
    RgbImage out(static_cast<int>(image.width), static_cast<int>(image.height));
    if (png_image_finish_read(&image, nullptr, out.mutable_bytes().data(), 0, nullptr) == 0) {
        std::string message = image.message;
        png_image_free(&image);
        throw InputError(std::string("cannot decode PNG ") + source + ": " + message);
    }
    return out;
}

}  // namespace

RgbImage read_png(const std::filesystem::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (png_image_begin_read_from_file(&image, path.c_str()) == 0) {
        throw InputError("cannot read PNG " + path.string() + ": " + image.message);
    }
    return finish_read(image, path.c_str());
}

RgbImage decode_png(std::span<const std::uint8_t> data) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (png_image_begin_read_from_memory(&image, data.data(), data.size()) == 0) {
        throw InputError(std::string("cannot decode PNG: ") + image.message);
    }
    return finish_read(image, "<memory>");
}

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
    png_image info{};
    info.version = PNG_IMAGE_VERSION;
    info.width = static_cast<png_uint_32>(image.width());
    info.height = static_cast<png_uint_32>(image.height());
    info.format = PNG_FORMAT_RGB;

    png_alloc_size_t size = 0;
    if (png_image_write_to_memory(&info, nullptr, &size, 0, image.bytes().data(), 0, nullptr) == 0) {
        throw InternalError(std::string("PNG encode sizing failed: ") + info.message);
    }
    std::vector<std::uint8_t> out(size);
    if (png_image_write_to_memory(&info, out.data(), &size, 0, image.bytes().data(), 0, nullptr) == 0) {
        throw InternalError(std::string("PNG encode failed: ") + info.message);
    }
    out.resize(size);
    return out;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
    const auto data = encode_png(image);
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw InternalError("cannot write " + path.string());
}

}  // namespace visca
