#include "spo2/synth.hpp"

#include <algorithm>
#include <cmath>

#include "spo2/common.hpp"
#include "spo2/signal_extraction.hpp"

namespace spo2 {

namespace {

struct Dip {
    double t_start = 0, t_min = 0, t_end = 0;
    double depth = 0;

    double value(double t) const {
        if (t <= t_start || t >= t_end) return 0.0;
        if (t <= t_min) {
            const double u = (t - t_start) / (t_min - t_start);
            return depth * 0.5 * (1.0 - std::cos(M_PI * u));
        }
        const double u = (t - t_min) / (t_end - t_min);
        return depth * 0.5 * (1.0 + std::cos(M_PI * u));
    }
};

}  // namespace

ProtocolResult generate_protocol(const ProtocolSpec& spec) {
    if (spec.cycles < 1) throw Error(ErrorCode::ConfigError, "cycles must be >= 1");
    Rng rng(spec.seed);
    ProtocolResult result;
    result.baseline = spec.baseline;
    result.boundaries.push_back(0.0);

    std::vector<Dip> dips;
    double t = 0.0;
    for (int c = 0; c < spec.cycles; ++c) {
        const double normal = rng.uniform(spec.normal_lo_s, spec.normal_hi_s);
        const double hold = rng.uniform(spec.hold_lo_s, spec.hold_hi_s);
        const double hold_start = t + normal;
        const double hold_end = hold_start + hold;

        Dip dip;
        dip.t_start = hold_start + 0.25 * hold;  // desaturation lags the hold onset
        dip.t_min = hold_end;
        dip.t_end = hold_end + spec.recover_s;
        dip.depth = rng.uniform(spec.dip_lo, spec.dip_hi);
        dip.depth = std::min(dip.depth, spec.baseline - 85.0);  // keep trajectory in [85,100]
        dips.push_back(dip);

        t = hold_end;
        result.boundaries.push_back(t);
    }
    const double total = t + spec.tail_s;
    result.boundaries.back() = total;  // the last cycle owns the tail

    result.ref.rate = 1.0;
    const int n = static_cast<int>(std::floor(total)) + 1;
    for (int i = 0; i < n; ++i) {
        const double ti = static_cast<double>(i);
        double v = spec.baseline;
        for (const auto& dip : dips) v -= dip.value(ti);
        v = std::clamp(v, 85.0, 100.0);
        result.ref.times.push_back(ti);
        result.ref.values.push_back(v);
    }
    return result;
}

double cardiac_pulse(double t, double heart_rate_hz, double harmonic_amp) {
    const double w = 2.0 * M_PI * heart_rate_hz * t;
    return std::sin(w) + harmonic_amp * std::sin(2.0 * w + 0.6);
}

SkinColorSignal synthesize_signal(const ReferenceSeries& ref, const OpticalModel& model, double fps,
                                  std::uint64_t seed) {
    if (ref.times.size() < 2) throw Error(ErrorCode::TooFewKnots, "reference needs >= 2 samples");
    if (fps <= 0) throw Error(ErrorCode::ConfigError, "fps must be positive");
    for (int c = 0; c < 3; ++c)
        if (model.dc[c] <= 0) throw Error(ErrorCode::ConfigError, "dc must be positive");

    Rng rng(seed);
    const double wander_phase = rng.uniform(0.0, 2.0 * M_PI);
    SkinColorSignal signal;
    signal.frame_rate = fps;
    signal.source_id = "synth";
    const double span = ref.times.back() - ref.times.front();
    const int n = static_cast<int>(std::floor(span * fps + 1e-9)) + 1;
    signal.samples.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double t = ref.times.front() + static_cast<double>(i) / fps;
        const double spo2 = ref.value_at(std::min(t, ref.times.back()));
        const double pulse = cardiac_pulse(t, model.heart_rate_hz, model.harmonic_amp);
        const double wander =
            model.wander_amp > 0
                ? model.wander_amp * std::sin(2.0 * M_PI * model.wander_freq_hz * t + wander_phase)
                : 0.0;
        std::array<double, 3> sample{};
        for (int c = 0; c < 3; ++c) {
            double v = model.dc[c] * (1.0 + model.modulation(c, spo2) * pulse + wander);
            if (model.noise_sd > 0) v += rng.normal(0.0, model.noise_sd * model.dc[c]);
            sample[c] = v;
        }
        signal.samples.push_back(sample);
    }
    return signal;
}

namespace {

struct SkinRect {
    int x0, y0, x1, y1;
    bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

SkinRect skin_rect(const RenderOptions& opts) {
    SkinRect r;
    r.x0 = static_cast<int>(opts.skin_x0 * opts.width);
    r.x1 = static_cast<int>(opts.skin_x1 * opts.width);
    r.y0 = static_cast<int>(opts.skin_y0 * opts.height);
    r.y1 = static_cast<int>(opts.skin_y1 * opts.height);
    if (r.x1 <= r.x0 || r.y1 <= r.y0) throw Error(ErrorCode::ConfigError, "empty skin rectangle");
    return r;
}

std::array<double, 3> background_rgb(const std::array<double, 3>& skin_sample, const RenderOptions& opts) {
    if (!opts.background_cr_matches_skin) {
        const double g = opts.background_gray;
        return {g, g, g};
    }
    // same chroma as skin but darker: scaling RGB scales (Cr-128) too, so
    // instead shift all channels equally, which leaves Cr unchanged
    const double shift = -20.0;
    return {skin_sample[0] + shift, skin_sample[1] + shift, skin_sample[2] + shift};
}

}  // namespace

std::vector<Frame> render_frames(const SkinColorSignal& signal, const RenderOptions& opts) {
    const SkinRect rect = skin_rect(opts);
    std::vector<Frame> frames;
    frames.reserve(signal.samples.size());
    for (const auto& sample : signal.samples) {
        Frame frame;
        frame.width = opts.width;
        frame.height = opts.height;
        frame.pixels.resize(static_cast<size_t>(opts.width) * opts.height);
        const auto bg = background_rgb(sample, opts);
        auto quant = [](double v) {
            return static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255));
        };
        const Rgb8 skin{quant(sample[0]), quant(sample[1]), quant(sample[2])};
        const Rgb8 back{quant(bg[0]), quant(bg[1]), quant(bg[2])};
        for (int y = 0; y < opts.height; ++y)
            for (int x = 0; x < opts.width; ++x)
                frame.at(x, y) = rect.contains(x, y) ? skin : back;
        frames.push_back(std::move(frame));
    }
    return frames;
}

std::vector<FloatFrame> render_frames_float(const SkinColorSignal& signal, const RenderOptions& opts) {
    const SkinRect rect = skin_rect(opts);
    std::vector<FloatFrame> frames;
    frames.reserve(signal.samples.size());
    for (const auto& sample : signal.samples) {
        FloatFrame frame;
        frame.width = opts.width;
        frame.height = opts.height;
        frame.pixels.resize(static_cast<size_t>(opts.width) * opts.height);
        const auto bg = background_rgb(sample, opts);
        for (int y = 0; y < opts.height; ++y)
            for (int x = 0; x < opts.width; ++x)
                frame.pixels[static_cast<size_t>(y) * opts.width + x] = rect.contains(x, y) ? sample : bg;
        frames.push_back(std::move(frame));
    }
    return frames;
}

SkinColorSignal extract_skin_signal_float(const std::vector<FloatFrame>& frames, double frame_rate) {
    if (frames.empty()) throw Error(ErrorCode::SignalTooShort, "no frames");
    SkinColorSignal signal;
    signal.frame_rate = frame_rate;
    signal.source_id = "float-frames";
    for (size_t idx = 0; idx < frames.size(); ++idx) {
        const auto& f = frames[idx];
        Histogram256 hist{};
        std::vector<int> cr_q(f.pixels.size());
        for (size_t i = 0; i < f.pixels.size(); ++i) {
            const auto& p = f.pixels[i];
            cr_q[i] = quantize_chroma(128.0 + 0.5 * p[0] - 0.418688 * p[1] - 0.081312 * p[2]);
            ++hist[cr_q[i]];
        }
        int threshold;
        try {
            threshold = otsu_threshold(hist);
        } catch (const Error& e) {
            throw Error(ErrorCode::InsufficientContrast, "frame " + std::to_string(idx) + ": " + e.what());
        }
        double sum[3] = {0, 0, 0};
        std::int64_t count = 0;
        for (size_t i = 0; i < f.pixels.size(); ++i) {
            if (cr_q[i] <= threshold) continue;
            for (int c = 0; c < 3; ++c) sum[c] += f.pixels[i][c];
            ++count;
        }
        const auto total = static_cast<std::int64_t>(f.pixels.size());
        if (count == 0 || count == total)
            throw Error(ErrorCode::InsufficientContrast, "frame " + std::to_string(idx) + ": single class");
        signal.samples.push_back({sum[0] / count, sum[1] / count, sum[2] / count});
    }
    return signal;
}

}  // namespace spo2
