#include "spo2/signal_extraction.hpp"

#include <cmath>

#include "spo2/common.hpp"

namespace spo2 {

YcbcrPlanes rgb_to_ycbcr(const Frame& frame) {
    if (!frame.valid()) throw Error(ErrorCode::IoError, "invalid frame");
    YcbcrPlanes out;
    out.width = frame.width;
    out.height = frame.height;
    const size_t n = frame.pixels.size();
    out.y.resize(n);
    out.cb.resize(n);
    out.cr.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const double r = frame.pixels[i].r;
        const double g = frame.pixels[i].g;
        const double b = frame.pixels[i].b;
        out.y[i] = 0.299 * r + 0.587 * g + 0.114 * b;
        out.cb[i] = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b;
        out.cr[i] = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b;
    }
    return out;
}

int quantize_chroma(double value) {
    int q = static_cast<int>(std::lround(value));
    if (q < 0) q = 0;
    if (q > 255) q = 255;
    return q;
}

int otsu_threshold(const Histogram256& hist) {
    int populated = 0;
    for (auto c : hist)
        if (c > 0) ++populated;
    if (populated < 2)
        throw Error(ErrorCode::DegenerateHistogram, "histogram needs two populated bins");

    // Minimizing within-class variance is equivalent to maximizing
    //   f(T) = sum_lo^2/w_lo + sum_hi^2/w_hi.
    // Candidates are compared by cross-multiplied integers, which is exact
    // for frames up to a few megapixels.
    using i128 = __int128;
    std::uint64_t total_w = 0, total_sum = 0;
    for (int v = 0; v < 256; ++v) {
        total_w += hist[v];
        total_sum += hist[v] * static_cast<std::uint64_t>(v);
    }

    int best = -1;
    i128 best_num = 0;
    i128 best_den = 1;
    std::uint64_t w_lo = 0, sum_lo = 0;
    for (int t = 0; t < 255; ++t) {
        w_lo += hist[t];
        sum_lo += hist[t] * static_cast<std::uint64_t>(t);
        const std::uint64_t w_hi = total_w - w_lo;
        if (w_lo == 0 || w_hi == 0) continue;
        const std::uint64_t sum_hi = total_sum - sum_lo;
        const i128 num = static_cast<i128>(sum_lo) * sum_lo * w_hi + static_cast<i128>(sum_hi) * sum_hi * w_lo;
        const i128 den = static_cast<i128>(w_lo) * w_hi;
        // f > best_f  <=>  num * best_den > best_num * den
        if (best < 0 || num * best_den > best_num * den) {
            best = t;
            best_num = num;
            best_den = den;
        }
    }
    return best;
}

SkinMask segment_skin(const Frame& frame, const SegmentationOptions& opts) {
    if (!frame.valid()) throw Error(ErrorCode::IoError, "invalid frame");
    const size_t n = frame.pixels.size();
    std::vector<int> cr_q(n);
    Histogram256 hist{};
    for (size_t i = 0; i < n; ++i) {
        const double r = frame.pixels[i].r;
        const double g = frame.pixels[i].g;
        const double b = frame.pixels[i].b;
        cr_q[i] = quantize_chroma(128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b);
        ++hist[cr_q[i]];
    }

    int threshold;
    try {
        threshold = otsu_threshold(hist);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::DegenerateHistogram)
            throw Error(ErrorCode::InsufficientContrast, "chroma histogram is degenerate");
        throw;
    }

    // The above-threshold class always has the higher mean Cr.
    SkinMask mask;
    mask.width = frame.width;
    mask.height = frame.height;
    mask.bits.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const bool high = cr_q[i] > threshold;
        mask.bits[i] = (high == opts.skin_is_high_chroma) ? 1 : 0;
    }

    const double fraction = mask.skin_fraction();
    if (fraction < opts.min_skin_fraction || fraction > opts.max_skin_fraction)
        throw Error(ErrorCode::InsufficientContrast,
                    "skin fraction " + format_double(fraction) + " outside [" +
                        format_double(opts.min_skin_fraction) + ", " + format_double(opts.max_skin_fraction) + "]");
    return mask;
}

std::array<double, 3> spatial_average(const Frame& frame, const SkinMask& mask) {
    if (frame.width != mask.width || frame.height != mask.height)
        throw Error(ErrorCode::ShapeMismatch, "mask/frame dimensions differ");
    double sum_r = 0, sum_g = 0, sum_b = 0;
    std::int64_t count = 0;
    for (size_t i = 0; i < frame.pixels.size(); ++i) {
        if (!mask.bits[i]) continue;
        sum_r += frame.pixels[i].r;
        sum_g += frame.pixels[i].g;
        sum_b += frame.pixels[i].b;
        ++count;
    }
    if (count == 0) throw Error(ErrorCode::EmptyMask, "mask has no skin pixels");
    const double inv = 1.0 / static_cast<double>(count);
    return {sum_r * inv, sum_g * inv, sum_b * inv};
}

namespace {

std::array<double, 3> frame_sample(const Frame& frame, size_t index, const SegmentationOptions& opts) {
    try {
        const SkinMask mask = segment_skin(frame, opts);
        return spatial_average(frame, mask);
    } catch (const Error& e) {
        throw Error(e.code(), "frame " + std::to_string(index) + ": " + e.what());
    }
}

}  // namespace

SkinColorSignal extract_skin_signal(const std::vector<Frame>& frames, double frame_rate,
                                    const SegmentationOptions& opts) {
    if (frames.empty()) throw Error(ErrorCode::SignalTooShort, "no frames");
    if (frame_rate <= 0) throw Error(ErrorCode::ConfigError, "frame_rate must be positive");
    for (size_t i = 1; i < frames.size(); ++i)
        if (frames[i].width != frames[0].width || frames[i].height != frames[0].height)
            throw Error(ErrorCode::ShapeMismatch, "frame " + std::to_string(i) + " has different dimensions");
    SkinColorSignal signal;
    signal.frame_rate = frame_rate;
    signal.samples.reserve(frames.size());
    for (size_t i = 0; i < frames.size(); ++i) signal.samples.push_back(frame_sample(frames[i], i, opts));
    return signal;
}

SkinColorSignal extract_skin_signal_from_dir(const std::string& dir, double frame_rate,
                                             const std::string& source_id, const SegmentationOptions& opts) {
    const auto files = list_frame_files(dir);
    if (files.empty()) throw Error(ErrorCode::SignalTooShort, "no frame files in " + dir);
    if (frame_rate <= 0) throw Error(ErrorCode::ConfigError, "frame_rate must be positive");
    SkinColorSignal signal;
    signal.frame_rate = frame_rate;
    signal.source_id = source_id;
    signal.samples.reserve(files.size());
    int width = -1, height = -1;
    for (size_t i = 0; i < files.size(); ++i) {
        const Frame frame = read_frame(files[i]);
        if (width < 0) {
            width = frame.width;
            height = frame.height;
        } else if (frame.width != width || frame.height != height) {
            throw Error(ErrorCode::ShapeMismatch, "frame " + std::to_string(i) + " has different dimensions");
        }
        signal.samples.push_back(frame_sample(frame, i, opts));
    }
    return signal;
}

}  // namespace spo2
