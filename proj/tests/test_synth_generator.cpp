#include <cmath>

#include "doctest.h"
#include "spo2/common.hpp"
#include "spo2/ratio_baseline.hpp"
#include "spo2/synth.hpp"

using namespace spo2;

TEST_CASE("protocol generation is deterministic and well shaped") {
    ProtocolSpec spec;
    spec.seed = 123;
    const ProtocolResult a = generate_protocol(spec);
    const ProtocolResult b = generate_protocol(spec);
    REQUIRE(a.ref.values.size() == b.ref.values.size());
    for (size_t i = 0; i < a.ref.values.size(); ++i) REQUIRE(a.ref.values[i] == b.ref.values[i]);

    for (double v : a.ref.values) {
        REQUIRE(v >= 85.0);
        REQUIRE(v <= 100.0);
    }
    REQUIRE(a.boundaries.size() == 4);
    CHECK(a.boundaries.front() == 0.0);
    CHECK(a.boundaries.back() == doctest::Approx(a.ref.times.back()).epsilon(0.02));
}

TEST_CASE("three cycles give exactly three dips below baseline") {
    ProtocolSpec spec;
    spec.seed = 77;
    const ProtocolResult result = generate_protocol(spec);
    const double threshold = spec.baseline - 1.0;
    // count strict local minima below baseline - 1%
    int minima = 0;
    const auto& v = result.ref.values;
    for (size_t i = 1; i + 1 < v.size(); ++i)
        if (v[i] < threshold && v[i] < v[i - 1] && v[i] <= v[i + 1] && (i + 2 >= v.size() || v[i] < v[i + 2]))
            ++minima;
    CHECK(minima == 3);
    // and three below-threshold episodes
    int episodes = 0;
    bool below = false;
    for (double x : v) {
        const bool now = x < threshold;
        if (now && !below) ++episodes;
        below = now;
    }
    CHECK(episodes == 3);
}

TEST_CASE("synthesize_signal is deterministic per seed") {
    ProtocolSpec spec;
    spec.seed = 9;
    const ProtocolResult protocol = generate_protocol(spec);
    OpticalModel model;
    model.noise_sd = 0.01;
    const SkinColorSignal a = synthesize_signal(protocol.ref, model, 30.0, 4);
    const SkinColorSignal b = synthesize_signal(protocol.ref, model, 30.0, 4);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i)
        for (int c = 0; c < 3; ++c) REQUIRE(a.samples[i][c] == b.samples[i][c]);
    const SkinColorSignal c = synthesize_signal(protocol.ref, model, 30.0, 5);
    bool different = false;
    for (size_t i = 0; i < a.size() && !different; ++i)
        if (a.samples[i][0] != c.samples[i][0]) different = true;
    CHECK(different);
}

TEST_CASE("noiseless ratio-of-ratios inverts back to SpO2 within 0.2 percent") {
    ProtocolSpec spec;
    spec.seed = 21;
    const ProtocolResult protocol = generate_protocol(spec);
    OpticalModel model;
    model.noise_sd = 0.0;
    model.wander_amp = 0.0;
    const SkinColorSignal signal = synthesize_signal(protocol.ref, model, 30.0, 4);

    const RatioSeries series = ratio_of_ratios(signal);
    REQUIRE(series.ratios.size() > 100);

    // the windowed estimator measures the window-average saturation, so the
    // oracle compares against the window mean of the true trajectory
    double abs_err = 0.0;
    for (size_t i = 0; i < series.ratios.size(); ++i) {
        const double recovered = model.spo2_from_ratio(series.ratios[i]);
        const double t_end = series.times[i];
        double mean_true = 0.0;
        const int steps = 100;
        for (int k = 0; k < steps; ++k)
            mean_true += protocol.ref.value_at(t_end - 10.0 + (k + 0.5) * 10.0 / steps);
        mean_true /= steps;
        abs_err += std::abs(recovered - mean_true);
    }
    abs_err /= static_cast<double>(series.ratios.size());
    CHECK(abs_err < 0.2);
}

TEST_CASE("zero sensitivity slopes make the ratio constant") {
    ProtocolSpec spec;
    spec.seed = 33;
    const ProtocolResult protocol = generate_protocol(spec);
    OpticalModel model;
    model.sens = {0.0, 0.0, 0.0};
    model.noise_sd = 0.0;
    const SkinColorSignal signal = synthesize_signal(protocol.ref, model, 30.0, 4);
    const RatioSeries series = ratio_of_ratios(signal);
    for (double r : series.ratios) REQUIRE(r == doctest::Approx(series.ratios.front()).epsilon(1e-6));
}

TEST_CASE("channel sensitivity ordering is preserved in generated data") {
    // regress each channel's per-window AC/DC against the true SpO2 and
    // check |slope_R| > |slope_B| > |slope_G|
    ProtocolSpec spec;
    spec.seed = 55;
    spec.dip_lo = 7.0;
    spec.dip_hi = 8.0;
    const ProtocolResult protocol = generate_protocol(spec);
    OpticalModel model;
    model.noise_sd = 0.0;
    model.wander_amp = 0.0;
    const SkinColorSignal signal = synthesize_signal(protocol.ref, model, 30.0, 4);

    RatioOptions green_opts;
    green_opts.use_green = true;

    // reuse the AC/DC machinery through ratio_of_ratios by regressing the
    // per-channel modulation directly from windows
    const int frames = 300, stride = 6;
    std::array<double, 3> slope{};
    for (int c = 0; c < 3; ++c) {
        std::vector<double> xs, ys;
        for (size_t start = 0; start + frames <= signal.size(); start += stride) {
            double mean = 0.0;
            for (int i = 0; i < frames; ++i) mean += signal.samples[start + i][c];
            mean /= frames;
            double ss = 0.0, mean_x = (frames - 1) / 2.0, sxx = 0.0, sxy = 0.0;
            for (int i = 0; i < frames; ++i) {
                sxx += (i - mean_x) * (i - mean_x);
                sxy += (i - mean_x) * (signal.samples[start + i][c] - mean);
            }
            const double lin = sxy / sxx;
            for (int i = 0; i < frames; ++i) {
                const double r = signal.samples[start + i][c] - mean - lin * (i - mean_x);
                ss += r * r;
            }
            const double ac = std::sqrt(ss / frames);
            double spo2 = 0.0;
            const int steps = 50;
            for (int k = 0; k < steps; ++k)
                spo2 += protocol.ref.value_at(static_cast<double>(start + frames) / 30.0 - 10.0 +
                                              (k + 0.5) * 10.0 / steps);
            spo2 /= steps;
            xs.push_back(spo2);
            ys.push_back(ac / mean);
        }
        double mx = 0, my = 0;
        for (size_t i = 0; i < xs.size(); ++i) {
            mx += xs[i];
            my += ys[i];
        }
        mx /= xs.size();
        my /= ys.size();
        double sxx = 0, sxy = 0;
        for (size_t i = 0; i < xs.size(); ++i) {
            sxx += (xs[i] - mx) * (xs[i] - mx);
            sxy += (xs[i] - mx) * (ys[i] - my);
        }
        slope[c] = sxy / sxx;
    }
    CHECK(std::abs(slope[0]) > std::abs(slope[2]));
    CHECK(std::abs(slope[2]) > std::abs(slope[1]));
}

TEST_CASE("rendered frame count equals signal length") {
    SkinColorSignal signal;
    signal.frame_rate = 30.0;
    for (int i = 0; i < 7; ++i) signal.samples.push_back({150.0, 110.0, 95.0});
    CHECK(render_frames(signal).size() == 7);
    CHECK(render_frames_float(signal).size() == 7);
}

TEST_CASE("analytic ratio map round trips") {
    OpticalModel model;
    for (double s : {98.0, 95.5, 91.0, 87.25}) {
        const double r = model.ratio_of_ratios(s);
        CHECK(model.spo2_from_ratio(r) == doctest::Approx(s).epsilon(1e-9));
    }
    CHECK(model.ordering_ok());
}
