#ifndef SPO2_SYNTH_HPP
#define SPO2_SYNTH_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "spo2/frame.hpp"
#include "spo2/signal.hpp"

namespace spo2 {

// Breathing protocol: `cycles` repetitions of normal breathing followed by a
// breath hold; each hold produces a smooth SpO2 dip that recovers early in
// the next normal phase.
struct ProtocolSpec {
    int cycles = 3;
    double normal_lo_s = 30.0, normal_hi_s = 40.0;
    double hold_lo_s = 30.0, hold_hi_s = 40.0;
    double baseline = 98.0;
    double dip_lo = 4.0, dip_hi = 8.0;  // percent below baseline
    double recover_s = 12.0;            // recovery tail after each hold
    double tail_s = 20.0;               // trailing normal breathing
    std::uint64_t seed = 1;
};

struct ProtocolResult {
    ReferenceSeries ref;              // 1 Hz
    std::vector<double> boundaries;   // cycle edges: [0, c1, c2, c3]
    double baseline = 98.0;
};

ProtocolResult generate_protocol(const ProtocolSpec& spec);

// Descriptive optical model: per channel c,
//   x_c(t) = dc[c] * (1 + (ac_base[c] + sens[c]*(SpO2(t)-98)) * pulse(t)
//                       + wander_amp * wander(t)) + noise
// with pulse a unit-amplitude cardiac waveform, wander a slow
// SpO2-independent baseline oscillation (illumination drift and micro
// motion; amplitude fixed, phase seeded), and noise Gaussian with standard
// deviation noise_sd * dc[c]. Channel order is R,G,B. The red/blue AC/DC
// ratio-of-ratios depends on SpO2 alone and is analytically invertible;
// with wander_amp = 0 and noise_sd = 0 the windowed estimate is exact up to
// within-window SpO2 drift.
struct OpticalModel {
    std::array<double, 3> dc = {150.0, 110.0, 95.0};
    std::array<double, 3> ac_base = {0.02, 0.02, 0.02};
    std::array<double, 3> sens = {-8.0e-4, 0.0, -4.8e-4};  // per percent SpO2
    double heart_rate_hz = 1.2;
    double harmonic_amp = 0.3;
    double wander_amp = 0.01;      // fraction of the channel DC
    double wander_freq_hz = 0.25;
    double noise_sd = 0.0;  // fraction of the channel DC

    double modulation(int channel, double spo2) const {
        return ac_base[channel] + sens[channel] * (spo2 - 98.0);
    }
    // R = (AC_R/DC_R) / (AC_B/DC_B) as a function of SpO2
    double ratio_of_ratios(double spo2) const { return modulation(0, spo2) / modulation(2, spo2); }
    // exact inverse of ratio_of_ratios
    double spo2_from_ratio(double ratio) const {
        return 98.0 + (ratio * ac_base[2] - ac_base[0]) / (sens[0] - ratio * sens[2]);
    }
    // expected trained-weight slope w_B/w_R under equal dc/ac_base/noise
    double sensitivity_ratio_blue_red() const { return sens[2] / sens[0]; }

    bool ordering_ok() const {
        return std::abs(sens[0]) > std::abs(sens[2]) && std::abs(sens[2]) > std::abs(sens[1]);
    }
};

double cardiac_pulse(double t, double heart_rate_hz, double harmonic_amp);

// SpO2(t) is taken from `ref` by linear interpolation.
SkinColorSignal synthesize_signal(const ReferenceSeries& ref, const OpticalModel& model, double fps,
                                  std::uint64_t seed);

// Frame rendering for extraction round trips. The skin rectangle is filled
// with the (rounded) signal sample; the background is neutral gray, which
// sits well below skin on the Cr axis unless background_cr_matches_skin.
struct RenderOptions {
    int width = 64;
    int height = 48;
    double skin_x0 = 0.25, skin_y0 = 0.25, skin_x1 = 0.75, skin_y1 = 0.75;  // fractional rect
    std::uint8_t background_gray = 120;
    bool background_cr_matches_skin = false;  // degenerate-contrast test hook
};

std::vector<Frame> render_frames(const SkinColorSignal& signal, const RenderOptions& opts = {});

// Quantization-free rendering: per-pixel double RGB.
struct FloatFrame {
    int width = 0;
    int height = 0;
    std::vector<std::array<double, 3>> pixels;
};

std::vector<FloatFrame> render_frames_float(const SkinColorSignal& signal, const RenderOptions& opts = {});

SkinColorSignal extract_skin_signal_float(const std::vector<FloatFrame>& frames, double frame_rate);

}  // namespace spo2

#endif
