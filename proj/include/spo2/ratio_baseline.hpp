#ifndef SPO2_RATIO_BASELINE_HPP
#define SPO2_RATIO_BASELINE_HPP

#include <vector>

#include "spo2/dataset.hpp"
#include "spo2/signal.hpp"

namespace spo2 {

struct RatioSeries {
    std::vector<double> times;   // window end times, matching the CNN prediction grid
    std::vector<double> ratios;  // (AC_R/DC_R)/(AC_B/DC_B) per window
};

struct RatioOptions {
    WindowOptions window;
    bool use_green = false;  // green instead of blue as the second wavelength
};

// Per window: DC = channel mean, AC = standard deviation of the linearly
// detrended channel. Throws NoPulse on nonpositive DC or vanishing
// second-channel modulation.
RatioSeries ratio_of_ratios(const SkinColorSignal& signal, const RatioOptions& opts = {});

// SpO2 = A - B * ratio
struct RatioCalibration {
    double a = 0.0;  // percent
    double b = 0.0;  // percent per unit ratio

    double estimate(double ratio) const { return a - b * ratio; }
};

// Least-squares fit of SpO2 = A - B*R over (ratio, reference) pairs.
RatioCalibration calibrate(const std::vector<double>& ratios, const std::vector<double>& reference);

PredictionSeries apply_calibration(const RatioSeries& series, const RatioCalibration& cal);

}  // namespace spo2

#endif
