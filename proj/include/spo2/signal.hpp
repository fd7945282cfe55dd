#ifndef SPO2_SIGNAL_HPP
#define SPO2_SIGNAL_HPP

#include <array>
#include <string>
#include <vector>

namespace spo2 {

// Spatially averaged skin color per frame, one (R,G,B) triple per frame.
struct SkinColorSignal {
    std::vector<std::array<double, 3>> samples;
    double frame_rate = 0.0;  // Hz
    std::string source_id;

    size_t size() const { return samples.size(); }
    double duration() const { return frame_rate > 0 ? samples.size() / frame_rate : 0.0; }
};

// Reference SpO2 samples, percent
struct ReferenceSeries {
    std::vector<double> times;   // seconds, strictly increasing
    std::vector<double> values;  // percent
    double rate = 0.0;           // Hz

    size_t size() const { return times.size(); }
    // linear interpolation between samples; throws ReferenceGap outside the span
    double value_at(double t) const;
};

// CSV schema: t,R,G,B
void write_signal_csv(const std::string& path, const SkinColorSignal& signal);
SkinColorSignal read_signal_csv(const std::string& path);

// CSV schema: t,spo2
void write_reference_csv(const std::string& path, const ReferenceSeries& ref);
ReferenceSeries read_reference_csv(const std::string& path);

// Prediction series (model or ratio baseline output)
struct PredictionSeries {
    std::vector<double> times;
    std::vector<double> values;
    bool postprocessed = false;
};

// CSV schema: t,spo2_raw for raw stage, t,spo2 once post-processed
void write_prediction_csv(const std::string& path, const PredictionSeries& pred);
PredictionSeries read_prediction_csv(const std::string& path);

}  // namespace spo2

#endif
