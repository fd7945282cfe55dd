#include <cmath>

#include "doctest.h"
#include "spo2/common.hpp"
#include "spo2/eval_stats.hpp"
#include "spo2/ratio_baseline.hpp"
#include "spo2/synth.hpp"

using namespace spo2;

namespace {

// plateau-heavy reference so windowed estimates line up with their labels
ReferenceSeries plateau_reference(const std::vector<std::pair<double, double>>& plateaus, double ramp_s) {
    ReferenceSeries ref;
    ref.rate = 1.0;
    double t = 0.0;
    double prev = plateaus.front().second;
    for (size_t p = 0; p < plateaus.size(); ++p) {
        const double target = plateaus[p].second;
        const double start = prev;
        if (p > 0)
            for (int i = 0; i < static_cast<int>(ramp_s); ++i) {
                const double u = (i + 1) / ramp_s;
                ref.times.push_back(t);
                ref.values.push_back(start + (target - start) * 0.5 * (1 - std::cos(M_PI * u)));
                t += 1.0;
            }
        for (int i = 0; i < static_cast<int>(plateaus[p].first); ++i) {
            ref.times.push_back(t);
            ref.values.push_back(target);
            t += 1.0;
        }
        prev = target;
    }
    return ref;
}

}  // namespace

TEST_CASE("windowed ratio matches the generator's analytic ratio within 2 percent") {
    const ReferenceSeries ref = plateau_reference({{60, 98}, {60, 90}, {60, 95}}, 8);
    OpticalModel model;
    model.noise_sd = 0.0;
    model.wander_amp = 0.0;
    const SkinColorSignal signal = synthesize_signal(ref, model, 30.0, 4);
    const RatioSeries series = ratio_of_ratios(signal);
    REQUIRE(series.ratios.size() > 100);
    for (size_t i = 0; i < series.ratios.size(); ++i) {
        // compare on plateau-interior windows where SpO2 is constant
        const double t_end = series.times[i];
        const double s_end = ref.value_at(t_end);
        const double s_start = ref.value_at(t_end - 10.0);
        if (std::abs(s_end - s_start) > 1e-9) continue;
        const double expected = model.ratio_of_ratios(s_end);
        REQUIRE(std::abs(series.ratios[i] - expected) / expected < 0.02);
    }
}

TEST_CASE("constant signal has no pulse") {
    SkinColorSignal signal;
    signal.frame_rate = 30.0;
    signal.samples.assign(400, {120.0, 110.0, 90.0});
    CHECK_THROWS_AS(ratio_of_ratios(signal), Error);
    try {
        ratio_of_ratios(signal);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoPulse);
    }
}

TEST_CASE("ratio is invariant to global illumination gain") {
    ProtocolSpec pspec;
    pspec.seed = 4;
    const ProtocolResult protocol = generate_protocol(pspec);
    OpticalModel model;
    model.noise_sd = 0.0;
    const SkinColorSignal signal = synthesize_signal(protocol.ref, model, 30.0, 4);
    SkinColorSignal scaled = signal;
    for (auto& s : scaled.samples)
        for (int c = 0; c < 3; ++c) s[c] *= 3.7;

    const RatioSeries a = ratio_of_ratios(signal);
    const RatioSeries b = ratio_of_ratios(scaled);
    REQUIRE(a.ratios.size() == b.ratios.size());
    for (size_t i = 0; i < a.ratios.size(); ++i) REQUIRE(std::abs(a.ratios[i] - b.ratios[i]) < 1e-9);
}

TEST_CASE("ratio series timestamps match the CNN prediction grid") {
    ProtocolSpec pspec;
    pspec.seed = 4;
    const ProtocolResult protocol = generate_protocol(pspec);
    OpticalModel model;
    const SkinColorSignal signal = synthesize_signal(protocol.ref, model, 30.0, 4);
    const RatioSeries series = ratio_of_ratios(signal);
    CHECK(series.times.front() == doctest::Approx(10.0));
    for (size_t i = 1; i < series.times.size(); ++i)
        REQUIRE(series.times[i] - series.times[i - 1] == doctest::Approx(0.2));
    const size_t expected = (signal.size() - 300) / 6 + 1;
    CHECK(series.times.size() == expected);
}

TEST_CASE("calibrate recovers exact linear data") {
    std::vector<double> ratios, spo2;
    for (int i = 0; i < 20; ++i) {
        const double r = 0.8 + 0.05 * i;
        ratios.push_back(r);
        spo2.push_back(110.0 - 25.0 * r);
    }
    const RatioCalibration cal = calibrate(ratios, spo2);
    CHECK(cal.a == doctest::Approx(110.0).epsilon(1e-9));
    CHECK(cal.b == doctest::Approx(25.0).epsilon(1e-9));

    std::vector<double> flat(10, 1.0), ref(10, 95.0);
    CHECK_THROWS_AS(calibrate(flat, ref), Error);
    try {
        calibrate(flat, ref);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateFit);
    }
}

TEST_CASE("noiseless synthetic recordings calibrate to held-out MAE below 0.5 percent") {
    // train calibration on recording 1, evaluate on recording 2
    const ReferenceSeries ref1 = plateau_reference({{120, 98}, {120, 91}, {80, 95}}, 10);
    const ReferenceSeries ref2 = plateau_reference({{100, 97}, {140, 92}, {80, 96}}, 10);
    OpticalModel model;
    model.noise_sd = 0.0;
    model.wander_amp = 0.0;
    model.sens = {-3.0e-4, 0.0, -0.3e-4};  // keep the ratio map near-affine
    const SkinColorSignal sig1 = synthesize_signal(ref1, model, 30.0, 7);
    const SkinColorSignal sig2 = synthesize_signal(ref2, model, 30.0, 8);

    const RatioSeries train = ratio_of_ratios(sig1);
    std::vector<double> labels;
    for (double t : train.times) labels.push_back(ref1.value_at(t));
    const RatioCalibration cal = calibrate(train.ratios, labels);

    const RatioSeries test = ratio_of_ratios(sig2);
    const PredictionSeries pred = apply_calibration(test, cal);
    double mae = 0.0;
    for (size_t i = 0; i < pred.values.size(); ++i) mae += std::abs(pred.values[i] - ref2.value_at(pred.times[i]));
    mae /= static_cast<double>(pred.values.size());
    CHECK(mae < 0.5);
}
