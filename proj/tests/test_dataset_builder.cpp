#include <cmath>
#include <set>

#include "doctest.h"
#include "spo2/common.hpp"
#include "spo2/dataset.hpp"
#include "spo2/synth.hpp"

using namespace spo2;

namespace {

ReferenceSeries make_ref(double t0, double t1, double rate, double value) {
    ReferenceSeries ref;
    ref.rate = rate;
    const int n = static_cast<int>((t1 - t0) * rate + 1e-9) + 1;
    for (int i = 0; i < n; ++i) {
        ref.times.push_back(t0 + i / rate);
        ref.values.push_back(value);
    }
    return ref;
}

SkinColorSignal constant_signal(int frames, double fps) {
    SkinColorSignal signal;
    signal.frame_rate = fps;
    signal.source_id = "test";
    Rng rng(3);
    for (int i = 0; i < frames; ++i)
        signal.samples.push_back({100 + rng.normal(), 90 + rng.normal(), 80 + rng.normal()});
    return signal;
}

}  // namespace

TEST_CASE("interpolate_reference keeps constants constant") {
    const ReferenceSeries ref = make_ref(0, 60, 1.0, 98.0);
    const ReferenceSeries out = interpolate_reference(ref, 5.0);
    CHECK(out.times.size() == 301);
    for (double v : out.values) CHECK(v == doctest::Approx(98.0));
    CHECK(out.times[1] - out.times[0] == doctest::Approx(0.2));
}

TEST_CASE("interpolate_reference reproduces knots exactly at lambda 0") {
    ReferenceSeries ref;
    ref.rate = 1.0;
    Rng rng(17);
    for (int t = 0; t <= 90; ++t) {
        ref.times.push_back(t);
        ref.values.push_back(95.0 + 3.0 * std::sin(0.2 * t) + rng.normal(0, 0.3));
    }
    const ReferenceSeries out = interpolate_reference(ref, 5.0);
    for (size_t i = 0; i < ref.times.size(); ++i) {
        const size_t j = i * 5;
        REQUIRE(j < out.times.size());
        CHECK(out.times[j] == doctest::Approx(ref.times[i]));
        CHECK(std::abs(out.values[j] - ref.values[i]) < 1e-9);
    }
}

TEST_CASE("interpolate_reference reproduces linear ramps to 1e-9") {
    ReferenceSeries ref;
    ref.rate = 1.0;
    for (int t = 0; t <= 60; ++t) {
        ref.times.push_back(t);
        ref.values.push_back(95.0 + 4.0 * t / 60.0);
    }
    const ReferenceSeries out = interpolate_reference(ref, 5.0);
    for (size_t i = 0; i < out.times.size(); ++i)
        CHECK(std::abs(out.values[i] - (95.0 + 4.0 * out.times[i] / 60.0)) < 1e-9);
}

TEST_CASE("interpolate_reference wants four knots") {
    ReferenceSeries ref;
    ref.rate = 1.0;
    ref.times = {0, 1, 2};
    ref.values = {98, 98, 98};
    CHECK_THROWS_AS(interpolate_reference(ref, 5.0), Error);
}

TEST_CASE("smoothing lambda pulls the fit toward a line") {
    ReferenceSeries ref;
    ref.rate = 1.0;
    for (int t = 0; t <= 30; ++t) {
        ref.times.push_back(t);
        ref.values.push_back(95.0 + ((t % 2 == 0) ? 0.5 : -0.5));
    }
    const ReferenceSeries exact = interpolate_reference(ref, 5.0, 0.0);
    const ReferenceSeries smooth = interpolate_reference(ref, 5.0, 100.0);
    double exact_dev = 0.0, smooth_dev = 0.0;
    for (size_t i = 0; i < exact.values.size(); ++i) {
        exact_dev += std::abs(exact.values[i] - 95.0);
        smooth_dev += std::abs(smooth.values[i] - 95.0);
    }
    CHECK(smooth_dev < 0.2 * exact_dev);
}

TEST_CASE("standardize matches the hand-computed example and its guards") {
    std::vector<double> x = {1, 2, 3};
    standardize(x, 1, 3);
    CHECK(x[0] == doctest::Approx(-1.22474487).epsilon(1e-6));
    CHECK(x[1] == doctest::Approx(0.0));
    CHECK(x[2] == doctest::Approx(1.22474487).epsilon(1e-6));

    std::vector<double> c = {7, 7, 7, 7};
    standardize(c, 1, 4);
    for (double v : c) CHECK(v == 0.0);

    // idempotence
    std::vector<double> y = x;
    standardize(y, 1, 3);
    for (size_t i = 0; i < y.size(); ++i) CHECK(y[i] == doctest::Approx(x[i]).epsilon(1e-9));
}

TEST_CASE("standardize is shift and scale invariant") {
    Rng rng(5);
    std::vector<double> x(300);
    for (auto& v : x) v = rng.normal(10, 3);
    std::vector<double> y(300);
    for (size_t i = 0; i < x.size(); ++i) y[i] = 2.5 * x[i] + 17.0;
    standardize(x, 1, 300);
    standardize(y, 1, 300);
    for (size_t i = 0; i < x.size(); ++i) CHECK(y[i] == doctest::Approx(x[i]).epsilon(1e-9));
}

TEST_CASE("window_segments counts and shapes") {
    const ReferenceSeries ref5 = make_ref(0, 70, 5.0, 97.0);

    SUBCASE("1800 frames give 251 segments") {
        const SegmentDataset ds = window_segments(constant_signal(1800, 30.0), ref5);
        CHECK(ds.size() == 251);
        for (const auto& seg : ds.segments) {
            CHECK(seg.length == 300);
            CHECK(seg.data.size() == 900);
            CHECK(seg.label == doctest::Approx(97.0));
        }
        // end times advance by the stride
        CHECK(ds.segments[0].end_time == doctest::Approx(10.0));
        CHECK(ds.segments[1].end_time == doctest::Approx(10.2));
    }

    SUBCASE("exactly 300 frames give one segment") {
        const SegmentDataset ds = window_segments(constant_signal(300, 30.0), ref5);
        CHECK(ds.size() == 1);
    }

    SUBCASE("299 frames are too short") {
        CHECK_THROWS_AS(window_segments(constant_signal(299, 30.0), ref5), Error);
        try {
            window_segments(constant_signal(299, 30.0), ref5);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::SignalTooShort);
        }
    }

    SUBCASE("segment count formula holds for many lengths") {
        const ReferenceSeries long_ref = make_ref(0, 90, 5.0, 97.0);
        for (int n : {300, 301, 305, 306, 307, 480, 999, 1800, 2406}) {
            const SegmentDataset ds = window_segments(constant_signal(n, 30.0), long_ref);
            CHECK(ds.size() == static_cast<size_t>((n - 300) / 6 + 1));
        }
    }

    SUBCASE("reference not covering the span raises ReferenceGap") {
        const ReferenceSeries short_ref = make_ref(0, 20, 5.0, 97.0);
        CHECK_THROWS_AS(window_segments(constant_signal(1800, 30.0), short_ref), Error);
    }
}

TEST_CASE("window segments are standardized per channel") {
    const ReferenceSeries ref5 = make_ref(0, 40, 5.0, 96.0);
    const SegmentDataset ds = window_segments(constant_signal(900, 30.0), ref5);
    for (const auto& seg : ds.segments) {
        for (int c = 0; c < 3; ++c) {
            double mean = 0.0, var = 0.0;
            for (int i = 0; i < seg.length; ++i) mean += seg.at(c, i);
            mean /= seg.length;
            for (int i = 0; i < seg.length; ++i) var += (seg.at(c, i) - mean) * (seg.at(c, i) - mean);
            var /= seg.length;
            REQUIRE(std::abs(mean) < 1e-6);
            REQUIRE(std::abs(var - 1.0) < 1e-6);
        }
    }
}

TEST_CASE("split_by_cycle assigns by interval and drops straddlers") {
    const ReferenceSeries ref5 = make_ref(0, 220, 5.0, 97.0);
    const SegmentDataset ds = window_segments(constant_signal(210 * 30, 30.0), ref5);
    const std::vector<double> boundaries = {0, 70, 140, 210};
    const CycleSplit split = split_by_cycle(ds, boundaries);

    CHECK(!split.train.empty());
    CHECK(!split.val.empty());
    CHECK(split.dropped > 0);
    CHECK(split.train.split_tag == "train");
    CHECK(split.val.split_tag == "val");

    for (const auto& seg : split.train.segments) {
        const double start = seg.end_time - 10.0;
        const bool in_c1 = start >= -1e-9 && seg.end_time <= 70 + 1e-9;
        const bool in_c2 = start >= 70 - 1e-9 && seg.end_time <= 140 + 1e-9;
        REQUIRE((in_c1 || in_c2));
        REQUIRE((seg.cycle_index == 1 || seg.cycle_index == 2));
    }
    for (const auto& seg : split.val.segments) {
        REQUIRE(seg.end_time - 10.0 >= 140 - 1e-9);
        REQUIRE(seg.end_time <= 210 + 1e-9);
        REQUIRE(seg.cycle_index == 3);
    }

    // segment ending at 65 is train; ending at 150 is val; span 68-78 dropped
    bool found65 = false, found150 = false;
    for (const auto& seg : split.train.segments)
        if (std::abs(seg.end_time - 65.0) < 1e-9) found65 = true;
    for (const auto& seg : split.val.segments)
        if (std::abs(seg.end_time - 150.0) < 1e-9) found150 = true;
    CHECK(found65);
    CHECK(found150);
    for (const auto& seg : split.train.segments) REQUIRE(std::abs(seg.end_time - 78.0) > 1e-9);
    for (const auto& seg : split.val.segments) REQUIRE(std::abs(seg.end_time - 78.0) > 1e-9);
}

TEST_CASE("split_by_cycle train and val never share a frame index") {
    const ReferenceSeries ref5 = make_ref(0, 220, 5.0, 97.0);
    const SegmentDataset ds = window_segments(constant_signal(6300, 30.0), ref5);
    const CycleSplit split = split_by_cycle(ds, {0, 70, 140, 210});
    double train_max_end = 0.0, val_min_start = 1e9;
    for (const auto& seg : split.train.segments) train_max_end = std::max(train_max_end, seg.end_time);
    for (const auto& seg : split.val.segments) val_min_start = std::min(val_min_start, seg.end_time - 10.0);
    CHECK(train_max_end <= val_min_start + 1e-9);
}

TEST_CASE("split_by_cycle validates boundaries") {
    const ReferenceSeries ref5 = make_ref(0, 40, 5.0, 97.0);
    const SegmentDataset ds = window_segments(constant_signal(900, 30.0), ref5);
    CHECK_THROWS_AS(split_by_cycle(ds, {0, 70}), Error);
    CHECK_THROWS_AS(split_by_cycle(ds, {0, 70, 60, 210}), Error);
    try {
        split_by_cycle(ds, {0, 70});
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BadBoundaries);
    }
}

TEST_CASE("bootstrap_oversample draws only originals, deterministically") {
    const ReferenceSeries ref5 = make_ref(0, 40, 5.0, 97.0);
    SegmentDataset ds = window_segments(constant_signal(354, 30.0), ref5);
    REQUIRE(ds.size() == 10);

    const SegmentDataset big = bootstrap_oversample(ds, 100, 42);
    CHECK(big.size() == 100);
    std::set<double> originals;
    for (const auto& seg : ds.segments) originals.insert(seg.end_time);
    for (const auto& seg : big.segments) REQUIRE(originals.count(seg.end_time) == 1);

    const SegmentDataset again = bootstrap_oversample(ds, 100, 42);
    for (size_t i = 0; i < big.size(); ++i)
        REQUIRE(big.segments[i].end_time == again.segments[i].end_time);

    const SegmentDataset small = bootstrap_oversample(ds, 4, 7);
    CHECK(small.size() == 4);

    SegmentDataset empty;
    CHECK_THROWS_AS(bootstrap_oversample(empty, 10, 1), Error);
}

TEST_CASE("leave_one_out_splits covers every participant exactly once") {
    std::vector<std::string> ids;
    for (int i = 1; i <= 14; ++i) ids.push_back("p" + std::to_string(i));
    const auto splits = leave_one_out_splits(ids);
    REQUIRE(splits.size() == 14);
    for (const auto& split : splits) {
        CHECK(split.train_participants.size() == 13);
        for (const auto& id : split.train_participants) REQUIRE(id != split.test_participant);
    }
    CHECK_THROWS_AS(leave_one_out_splits({"solo"}), Error);
}

TEST_CASE("annotation json round trips") {
    RecordingAnnotation ann;
    ann.participant_id = "p3";
    ann.hand_mode = HandMode::PU;
    ann.skin_type = 4;
    ann.cycle_boundaries = {0, 71.5, 140.25, 212};
    const std::string path = "/tmp/spo2_test_annotation.json";
    write_annotation_json(path, ann);
    const RecordingAnnotation back = read_annotation_json(path);
    CHECK(back.participant_id == "p3");
    CHECK(back.hand_mode == HandMode::PU);
    CHECK(back.skin_type == 4);
    REQUIRE(back.cycle_boundaries.size() == 4);
    CHECK(back.cycle_boundaries[1] == doctest::Approx(71.5));
}
