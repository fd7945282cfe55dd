#include "spo2/frame.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "spo2/common.hpp"

#ifdef SPO2_HAVE_PNG
#include <png.h>
#endif

namespace spo2 {

double SkinMask::skin_fraction() const {
    if (bits.empty()) return 0.0;
    return static_cast<double>(true_count()) / static_cast<double>(bits.size());
}

int SkinMask::true_count() const {
    int n = 0;
    for (auto b : bits) n += b ? 1 : 0;
    return n;
}

namespace {

int read_ppm_token(std::istream& in) {
    // skips whitespace and '#' comments
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = in.get();
    }
    if (c == EOF) throw Error(ErrorCode::IoError, "truncated PPM header");
    int value = 0;
    bool any = false;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        any = true;
        c = in.get();
    }
    if (!any) throw Error(ErrorCode::IoError, "malformed PPM header");
    return value;
}

Frame read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    char magic[2];
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || magic[1] != '6')
        throw Error(ErrorCode::IoError, path + " is not a binary PPM (P6)");
    Frame frame;
    frame.width = read_ppm_token(in);
    frame.height = read_ppm_token(in);
    const int maxval = read_ppm_token(in);
    if (maxval != 255) throw Error(ErrorCode::IoError, path + ": only maxval 255 supported");
    if (frame.width <= 0 || frame.height <= 0)
        throw Error(ErrorCode::IoError, path + ": bad dimensions");
    frame.pixels.resize(static_cast<size_t>(frame.width) * frame.height);
    in.read(reinterpret_cast<char*>(frame.pixels.data()), static_cast<std::streamsize>(frame.pixels.size() * 3));
    if (!in) throw Error(ErrorCode::IoError, path + ": truncated pixel data");
    return frame;
}

#ifdef SPO2_HAVE_PNG
Frame read_png(const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw Error(ErrorCode::IoError, "cannot open " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        std::fclose(fp);
        throw Error(ErrorCode::IoError, "libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw Error(ErrorCode::IoError, path + ": PNG decode failed");
    }
    png_init_io(png, fp);
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    int color_type = png_get_color_type(png, info);

    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    Frame frame;
    frame.width = static_cast<int>(w);
    frame.height = static_cast<int>(h);
    frame.pixels.resize(static_cast<size_t>(w) * h);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y)
        rows[y] = reinterpret_cast<png_bytep>(frame.pixels.data() + static_cast<size_t>(y) * w);
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return frame;
}
#endif

}  // namespace

Frame read_frame(const std::string& path) {
    auto ends_with = [&](const char* suffix) {
        std::string s = path;
        std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
        std::string suf(suffix);
        return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
    };
    if (ends_with(".ppm")) return read_ppm(path);
    if (ends_with(".png")) {
#ifdef SPO2_HAVE_PNG
        return read_png(path);
#else
        throw Error(ErrorCode::IoError, "built without PNG support: " + path);
#endif
    }
    throw Error(ErrorCode::IoError, "unsupported frame format: " + path);
}

void write_ppm(const std::string& path, const Frame& frame) {
    if (!frame.valid()) throw Error(ErrorCode::IoError, "invalid frame");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    out << "P6\n" << frame.width << " " << frame.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(frame.pixels.data()),
              static_cast<std::streamsize>(frame.pixels.size() * 3));
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

std::vector<std::string> list_frame_files(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, dir + " is not a directory");
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".ppm" || ext == ".png") files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    return files;
}

}  // namespace spo2
