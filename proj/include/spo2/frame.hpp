#ifndef SPO2_FRAME_HPP
#define SPO2_FRAME_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace spo2 {

struct Rgb8 {
    std::uint8_t r = 0, g = 0, b = 0;
};

// 8-bit RGB frame, row-major
struct Frame {
    int width = 0;
    int height = 0;
    std::vector<Rgb8> pixels;

    int pixel_count() const { return width * height; }
    const Rgb8& at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
    Rgb8& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
    bool valid() const { return width > 0 && height > 0 && pixels.size() == static_cast<size_t>(width) * height; }
};

struct SkinMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;  // 1 = skin

    double skin_fraction() const;
    int true_count() const;
};

// Frame files: binary PPM (P6, maxval 255) always; PNG when built with libpng.
Frame read_frame(const std::string& path);
void write_ppm(const std::string& path, const Frame& frame);

// Lexicographically ordered frame files under dir (extensions .ppm/.png)
std::vector<std::string> list_frame_files(const std::string& dir);

}  // namespace spo2

#endif
