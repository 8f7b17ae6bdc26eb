#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace visca {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Integer rectangle in device pixels.
struct Rect {
    int x = 0, y = 0, w = 0, h = 0;

    bool empty() const noexcept { return w <= 0 || h <= 0; }
    friend bool operator==(const Rect&, const Rect&) = default;
};

// Tightly packed 8-bit RGB raster, row-major.
class RgbImage {
public:
    RgbImage() = default;
    RgbImage(int width, int height, Rgb fill = {});

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return width_ == 0 || height_ == 0; }

    Rgb at(int x, int y) const noexcept {
        const auto* p = &pixels_[offset(x, y)];
        return {p[0], p[1], p[2]};
    }
    void set(int x, int y, Rgb c) noexcept {
        auto* p = &pixels_[offset(x, y)];
        p[0] = c.r;
        p[1] = c.g;
        p[2] = c.b;
    }

    void fill_rect(const Rect& r, Rgb c);

    // Sub-image of the intersection of `r` with the image bounds.
    RgbImage crop(const Rect& r) const;

    std::span<const std::uint8_t> bytes() const noexcept { return pixels_; }
    std::span<std::uint8_t> mutable_bytes() noexcept { return pixels_; }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;

private:
    std::size_t offset(int x, int y) const noexcept {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

Rect clamp_rect(const Rect& r, int width, int height) noexcept;

// PNG codec (libpng). Alpha, if present, is dropped.
RgbImage read_png(const std::filesystem::path& path);
RgbImage decode_png(std::span<const std::uint8_t> data);
std::vector<std::uint8_t> encode_png(const RgbImage& image);
void write_png(const std::filesystem::path& path, const RgbImage& image);

}  // namespace visca
