#include "spo2/ratio_baseline.hpp"

#include <cmath>

#include "spo2/common.hpp"

namespace spo2 {

namespace {

// mean and standard deviation of the residual after removing the
// least-squares line
struct AcDc {
    double dc = 0.0;
    double ac = 0.0;
};

AcDc window_ac_dc(const SkinColorSignal& signal, int start, int frames, int channel) {
    double mean_x = 0.0, mean_y = 0.0;
    for (int i = 0; i < frames; ++i) {
        mean_x += i;
        mean_y += signal.samples[start + i][channel];
    }
    mean_x /= frames;
    mean_y /= frames;
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < frames; ++i) {
        const double dx = i - mean_x;
        sxx += dx * dx;
        sxy += dx * (signal.samples[start + i][channel] - mean_y);
    }
    const double slope = sxy / sxx;
    double ss = 0.0;
    for (int i = 0; i < frames; ++i) {
        const double r = signal.samples[start + i][channel] - mean_y - slope * (i - mean_x);
        ss += r * r;
    }
    AcDc out;
    out.dc = mean_y;
    out.ac = std::sqrt(ss / frames);
    return out;
}

}  // namespace

RatioSeries ratio_of_ratios(const SkinColorSignal& signal, const RatioOptions& opts) {
    if (signal.frame_rate <= 0) throw Error(ErrorCode::ConfigError, "signal frame_rate must be positive");
    const int frames = static_cast<int>(std::lround(opts.window.window_seconds * signal.frame_rate));
    const int stride = std::max(1, static_cast<int>(std::lround(opts.window.stride_seconds * signal.frame_rate)));
    const int n = static_cast<int>(signal.size());
    if (n < frames)
        throw Error(ErrorCode::SignalTooShort, std::to_string(n) + " frames, need " + std::to_string(frames));

    const int second_channel = opts.use_green ? 1 : 2;
    RatioSeries series;
    for (int start = 0; start + frames <= n; start += stride) {
        const AcDc red = window_ac_dc(signal, start, frames, 0);
        const AcDc other = window_ac_dc(signal, start, frames, second_channel);
        if (red.dc <= 0.0 || other.dc <= 0.0)
            throw Error(ErrorCode::NoPulse, "nonpositive DC in window at frame " + std::to_string(start));
        const double denom = other.ac / other.dc;
        if (denom < 1e-9)
            throw Error(ErrorCode::NoPulse, "no pulsatile component in window at frame " + std::to_string(start));
        series.times.push_back(static_cast<double>(start + frames) / signal.frame_rate);
        series.ratios.push_back((red.ac / red.dc) / denom);
    }
    return series;
}

RatioCalibration calibrate(const std::vector<double>& ratios, const std::vector<double>& reference) {
    if (ratios.size() != reference.size())
        throw Error(ErrorCode::ShapeMismatch, "calibration needs paired ratios and references");
    if (ratios.size() < 2) throw Error(ErrorCode::DegenerateFit, "need at least two calibration pairs");
    double mean_r = 0.0, mean_s = 0.0;
    for (size_t i = 0; i < ratios.size(); ++i) {
        mean_r += ratios[i];
        mean_s += reference[i];
    }
    mean_r /= ratios.size();
    mean_s /= ratios.size();
    double srr = 0.0, srs = 0.0;
    for (size_t i = 0; i < ratios.size(); ++i) {
        const double dr = ratios[i] - mean_r;
        srr += dr * dr;
        srs += dr * (reference[i] - mean_s);
    }
    if (srr < 1e-18) throw Error(ErrorCode::DegenerateFit, "all calibration ratios are equal");
    RatioCalibration cal;
    cal.b = -srs / srr;
    cal.a = mean_s + cal.b * mean_r;
    return cal;
}

PredictionSeries apply_calibration(const RatioSeries& series, const RatioCalibration& cal) {
    PredictionSeries pred;
    pred.postprocessed = false;
    pred.times = series.times;
    pred.values.reserve(series.ratios.size());
    for (double r : series.ratios) pred.values.push_back(cal.estimate(r));
    return pred;
}

}  // namespace spo2
