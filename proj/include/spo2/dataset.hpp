#ifndef SPO2_DATASET_HPP
#define SPO2_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "spo2/signal.hpp"

namespace spo2 {

enum class HandMode { PD, PU };

const char* hand_mode_name(HandMode mode);
HandMode hand_mode_from_name(const std::string& name);

// Per-recording protocol annotation (operator controlled, not inferred)
struct RecordingAnnotation {
    std::string participant_id;
    HandMode hand_mode = HandMode::PD;
    int skin_type = 3;                    // Fitzpatrick II-V, metadata only
    std::vector<double> cycle_boundaries;  // [start, c1, c2, c3]
};

RecordingAnnotation read_annotation_json(const std::string& path);
void write_annotation_json(const std::string& path, const RecordingAnnotation& ann);

// Standardized network input: 3 channels x `length` samples, channel-major.
struct Segment {
    std::vector<double> data;  // 3 * length
    int length = 0;
    double label = 0.0;     // SpO2 percent at the window end
    double end_time = 0.0;  // seconds
    std::string participant_id;
    int cycle_index = 0;  // 1..3 once split, 0 before
    HandMode hand_mode = HandMode::PD;
    int skin_type = 3;

    double& at(int channel, int i) { return data[static_cast<size_t>(channel) * length + i]; }
    double at(int channel, int i) const { return data[static_cast<size_t>(channel) * length + i]; }
};

struct SegmentDataset {
    std::vector<Segment> segments;
    std::vector<std::string> provenance;  // recording ids
    std::string split_tag;                // train|val|test
    double window_seconds = 10.0;

    bool empty() const { return segments.empty(); }
    size_t size() const { return segments.size(); }
};

// Cubic smoothing-spline resample onto a uniform grid at target_rate.
// lambda = 0 (default) interpolates the knots exactly.
ReferenceSeries interpolate_reference(const ReferenceSeries& ref, double target_rate, double lambda = 0.0);

// In place, per channel: subtract mean, divide by population standard
// deviation; channels with std < 1e-12 become all zeros.
void standardize(std::vector<double>& data, int channels, int length);

struct WindowOptions {
    double window_seconds = 10.0;
    double stride_seconds = 0.2;
};

struct SegmentMeta {
    std::string participant_id;
    HandMode hand_mode = HandMode::PD;
    int skin_type = 3;
};

// Sliding windows over the signal, labeled with the reference value at the
// window end time (causal labeling), standardized per segment per channel.
SegmentDataset window_segments(const SkinColorSignal& signal, const ReferenceSeries& ref5,
                               const SegmentMeta& meta = {}, const WindowOptions& opts = {});

// Cycles 1-2 train, cycle 3 validation; segments whose span straddles any
// cycle boundary are dropped so the splits cannot overlap.
struct CycleSplit {
    SegmentDataset train;
    SegmentDataset val;
    size_t dropped = 0;
};

CycleSplit split_by_cycle(const SegmentDataset& ds, const std::vector<double>& boundaries);

// Uniform sampling with replacement to target_size; deterministic per seed.
SegmentDataset bootstrap_oversample(const SegmentDataset& ds, size_t target_size, std::uint64_t seed);

struct LeaveOneOutSplit {
    std::vector<std::string> train_participants;
    std::string test_participant;
};

std::vector<LeaveOneOutSplit> leave_one_out_splits(const std::vector<std::string>& participants);

}  // namespace spo2

#endif
