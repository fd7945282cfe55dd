#include "spo2/dataset.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "spo2/common.hpp"
#include "spo2/spline.hpp"

namespace spo2 {

using json = nlohmann::json;

const char* hand_mode_name(HandMode mode) { return mode == HandMode::PD ? "PD" : "PU"; }

HandMode hand_mode_from_name(const std::string& name) {
    if (name == "PD") return HandMode::PD;
    if (name == "PU") return HandMode::PU;
    throw Error(ErrorCode::ConfigError, "hand_mode must be PD or PU, got '" + name + "'");
}

RecordingAnnotation read_annotation_json(const std::string& path) {
    json j = json::parse(read_text_file(path));
    RecordingAnnotation ann;
    ann.participant_id = j.at("participant_id").get<std::string>();
    ann.hand_mode = hand_mode_from_name(j.at("hand_mode").get<std::string>());
    ann.skin_type = j.at("skin_type").get<int>();
    ann.cycle_boundaries = j.at("cycle_boundaries").get<std::vector<double>>();
    if (ann.skin_type < 2 || ann.skin_type > 5)
        throw Error(ErrorCode::ConfigError, path + ": skin_type must be in [2,5]");
    return ann;
}

void write_annotation_json(const std::string& path, const RecordingAnnotation& ann) {
    json j;
    j["participant_id"] = ann.participant_id;
    j["hand_mode"] = hand_mode_name(ann.hand_mode);
    j["skin_type"] = ann.skin_type;
    j["cycle_boundaries"] = ann.cycle_boundaries;
    write_text_file(path, j.dump(2) + "\n");
}

ReferenceSeries interpolate_reference(const ReferenceSeries& ref, double target_rate, double lambda) {
    if (ref.times.size() < 4) throw Error(ErrorCode::TooFewKnots, "need >= 4 reference knots");
    if (target_rate < ref.rate)
        throw Error(ErrorCode::ConfigError, "target_rate below the reference rate");
    CubicSmoothingSpline spline(ref.times, ref.values, lambda);
    ReferenceSeries out;
    out.rate = target_rate;
    const double t0 = ref.times.front();
    const double span = ref.times.back() - t0;
    const int n = static_cast<int>(std::floor(span * target_rate + 1e-9)) + 1;
    out.times.reserve(n);
    out.values.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double t = t0 + static_cast<double>(i) / target_rate;
        out.times.push_back(t);
        out.values.push_back(spline(t));
    }
    return out;
}

void standardize(std::vector<double>& data, int channels, int length) {
    if (static_cast<size_t>(channels) * length != data.size())
        throw Error(ErrorCode::ShapeMismatch, "standardize shape mismatch");
    for (int c = 0; c < channels; ++c) {
        double* x = data.data() + static_cast<size_t>(c) * length;
        double mean = 0.0;
        for (int i = 0; i < length; ++i) mean += x[i];
        mean /= length;
        double var = 0.0;
        for (int i = 0; i < length; ++i) {
            const double d = x[i] - mean;
            var += d * d;
        }
        var /= length;  // population variance
        const double sd = std::sqrt(var);
        if (sd < 1e-12) {
            for (int i = 0; i < length; ++i) x[i] = 0.0;
        } else {
            const double inv = 1.0 / sd;
            for (int i = 0; i < length; ++i) x[i] = (x[i] - mean) * inv;
        }
    }
}

SegmentDataset window_segments(const SkinColorSignal& signal, const ReferenceSeries& ref5,
                               const SegmentMeta& meta, const WindowOptions& opts) {
    if (signal.frame_rate <= 0) throw Error(ErrorCode::ConfigError, "signal frame_rate must be positive");
    const int frames = static_cast<int>(std::lround(opts.window_seconds * signal.frame_rate));
    const int stride = std::max(1, static_cast<int>(std::lround(opts.stride_seconds * signal.frame_rate)));
    const int n = static_cast<int>(signal.size());
    if (n < frames)
        throw Error(ErrorCode::SignalTooShort,
                    std::to_string(n) + " frames, need " + std::to_string(frames));

    SegmentDataset ds;
    ds.window_seconds = opts.window_seconds;
    if (!signal.source_id.empty()) ds.provenance.push_back(signal.source_id);
    for (int start = 0; start + frames <= n; start += stride) {
        Segment seg;
        seg.length = frames;
        seg.data.resize(3 * static_cast<size_t>(frames));
        for (int c = 0; c < 3; ++c)
            for (int i = 0; i < frames; ++i) seg.at(c, i) = signal.samples[start + i][c];
        standardize(seg.data, 3, frames);
        seg.end_time = static_cast<double>(start + frames) / signal.frame_rate;
        seg.label = ref5.value_at(seg.end_time);  // throws ReferenceGap outside the span
        if (seg.label < 70.0 || seg.label > 100.0)
            throw Error(ErrorCode::ConfigError,
                        "reference label " + format_double(seg.label) + " outside [70,100]");
        seg.participant_id = meta.participant_id;
        seg.hand_mode = meta.hand_mode;
        seg.skin_type = meta.skin_type;
        ds.segments.push_back(std::move(seg));
    }
    return ds;
}

CycleSplit split_by_cycle(const SegmentDataset& ds, const std::vector<double>& boundaries) {
    if (boundaries.size() != 4)
        throw Error(ErrorCode::BadBoundaries, "expected 4 boundary times delimiting 3 cycles");
    for (size_t i = 1; i < boundaries.size(); ++i)
        if (boundaries[i] <= boundaries[i - 1])
            throw Error(ErrorCode::BadBoundaries, "boundaries must be strictly increasing");

    const double eps = 1e-9;
    CycleSplit split;
    split.train.split_tag = "train";
    split.val.split_tag = "val";
    split.train.provenance = ds.provenance;
    split.val.provenance = ds.provenance;
    split.train.window_seconds = ds.window_seconds;
    split.val.window_seconds = ds.window_seconds;
    for (const auto& seg : ds.segments) {
        const double end = seg.end_time;
        const double start = end - ds.window_seconds;
        int cycle = 0;
        for (int k = 1; k <= 3; ++k) {
            if (start >= boundaries[k - 1] - eps && end <= boundaries[k] + eps) {
                cycle = k;
                break;
            }
        }
        if (cycle == 0) {
            ++split.dropped;  // straddles a boundary or lies outside the protocol
            continue;
        }
        Segment copy = seg;
        copy.cycle_index = cycle;
        (cycle <= 2 ? split.train : split.val).segments.push_back(std::move(copy));
    }
    return split;
}

SegmentDataset bootstrap_oversample(const SegmentDataset& ds, size_t target_size, std::uint64_t seed) {
    if (ds.empty()) throw Error(ErrorCode::EmptyDataset, "cannot oversample an empty dataset");
    Rng rng(seed);
    SegmentDataset out;
    out.provenance = ds.provenance;
    out.split_tag = ds.split_tag;
    out.window_seconds = ds.window_seconds;
    out.segments.reserve(target_size);
    for (size_t i = 0; i < target_size; ++i)
        out.segments.push_back(ds.segments[rng.uniform_u64(ds.segments.size())]);
    return out;
}

std::vector<LeaveOneOutSplit> leave_one_out_splits(const std::vector<std::string>& participants) {
    if (participants.size() < 2)
        throw Error(ErrorCode::TooFewParticipants, "leave-one-out needs >= 2 participants");
    std::vector<LeaveOneOutSplit> splits;
    for (size_t i = 0; i < participants.size(); ++i) {
        LeaveOneOutSplit s;
        s.test_participant = participants[i];
        for (size_t j = 0; j < participants.size(); ++j)
            if (j != i) s.train_participants.push_back(participants[j]);
        splits.push_back(std::move(s));
    }
    return splits;
}

}  // namespace spo2
