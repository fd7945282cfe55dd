#ifndef SPO2_SIGNAL_EXTRACTION_HPP
#define SPO2_SIGNAL_EXTRACTION_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "spo2/frame.hpp"
#include "spo2/signal.hpp"

namespace spo2 {

struct YcbcrPlanes {
    int width = 0;
    int height = 0;
    std::vector<double> y, cb, cr;  // row-major, unclamped
};

// Full-range BT.601:
//   Y  =       0.299 R + 0.587 G + 0.114 B
//   Cb = 128 - 0.168736 R - 0.331264 G + 0.5 B
//   Cr = 128 + 0.5 R - 0.418688 G - 0.081312 B
YcbcrPlanes rgb_to_ycbcr(const Frame& frame);

// Chroma value quantized for histogramming: rounded, clamped to [0,255]
int quantize_chroma(double value);

using Histogram256 = std::array<std::uint64_t, 256>;

// Threshold minimizing total within-class variance; the cut assigns values
// <= threshold to the low class. Ties resolve to the smallest threshold.
// Exact integer arithmetic, so the argmin is reproducible bit-for-bit.
// Throws DegenerateHistogram when fewer than two bins are populated.
int otsu_threshold(const Histogram256& hist);

struct SegmentationOptions {
    // skin is the higher-Cr class; flip for unusual backgrounds
    bool skin_is_high_chroma = true;
    double min_skin_fraction = 0.005;
    double max_skin_fraction = 0.995;
};

SkinMask segment_skin(const Frame& frame, const SegmentationOptions& opts = {});

// Arithmetic mean of each channel over masked pixels. Throws EmptyMask.
std::array<double, 3> spatial_average(const Frame& frame, const SkinMask& mask);

// One spatially averaged sample per frame; a fresh mask per frame.
// Extraction errors are rethrown with the offending frame index.
SkinColorSignal extract_skin_signal(const std::vector<Frame>& frames, double frame_rate,
                                    const SegmentationOptions& opts = {});

// Streaming variant for directories of frame files.
SkinColorSignal extract_skin_signal_from_dir(const std::string& dir, double frame_rate,
                                             const std::string& source_id,
                                             const SegmentationOptions& opts = {});

}  // namespace spo2

#endif
