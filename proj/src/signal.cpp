#include "spo2/signal.hpp"

#include <sstream>

#include "spo2/common.hpp"

namespace spo2 {

double ReferenceSeries::value_at(double t) const {
    if (times.empty()) throw Error(ErrorCode::ReferenceGap, "empty reference series");
    const double eps = 1e-9;
    if (t < times.front() - eps || t > times.back() + eps)
        throw Error(ErrorCode::ReferenceGap,
                    "t=" + format_double(t) + " outside reference span [" + format_double(times.front()) +
                        ", " + format_double(times.back()) + "]");
    if (t <= times.front()) return values.front();
    if (t >= times.back()) return values.back();
    // binary search for the bracketing interval
    size_t lo = 0, hi = times.size() - 1;
    while (hi - lo > 1) {
        size_t mid = (lo + hi) / 2;
        if (times[mid] <= t)
            lo = mid;
        else
            hi = mid;
    }
    const double w = (t - times[lo]) / (times[hi] - times[lo]);
    return values[lo] + w * (values[hi] - values[lo]);
}

void write_signal_csv(const std::string& path, const SkinColorSignal& signal) {
    std::ostringstream out;
    out << "t,R,G,B\n";
    for (size_t i = 0; i < signal.samples.size(); ++i) {
        const double t = signal.frame_rate > 0 ? static_cast<double>(i) / signal.frame_rate : static_cast<double>(i);
        out << format_double(t) << ',' << format_double(signal.samples[i][0]) << ','
            << format_double(signal.samples[i][1]) << ',' << format_double(signal.samples[i][2]) << '\n';
    }
    write_text_file(path, out.str());
}

SkinColorSignal read_signal_csv(const std::string& path) {
    CsvTable table = read_csv(path);
    const int ct = table.column("t");
    const int cr = table.column("R");
    const int cg = table.column("G");
    const int cb = table.column("B");
    SkinColorSignal signal;
    std::vector<double> times;
    for (const auto& row : table.rows) {
        times.push_back(parse_double(row[ct]));
        signal.samples.push_back({parse_double(row[cr]), parse_double(row[cg]), parse_double(row[cb])});
    }
    if (times.size() < 2) throw Error(ErrorCode::IoError, path + ": need at least two samples");
    signal.frame_rate = (times.size() - 1) / (times.back() - times.front());
    signal.source_id = path;
    return signal;
}

void write_reference_csv(const std::string& path, const ReferenceSeries& ref) {
    std::ostringstream out;
    out << "t,spo2\n";
    for (size_t i = 0; i < ref.times.size(); ++i)
        out << format_double(ref.times[i]) << ',' << format_double(ref.values[i]) << '\n';
    write_text_file(path, out.str());
}

ReferenceSeries read_reference_csv(const std::string& path) {
    CsvTable table = read_csv(path);
    const int ct = table.column("t");
    const int cv = table.column("spo2");
    ReferenceSeries ref;
    for (const auto& row : table.rows) {
        ref.times.push_back(parse_double(row[ct]));
        ref.values.push_back(parse_double(row[cv]));
    }
    for (size_t i = 1; i < ref.times.size(); ++i)
        if (ref.times[i] <= ref.times[i - 1])
            throw Error(ErrorCode::IoError, path + ": times must be strictly increasing");
    if (ref.times.size() >= 2) ref.rate = (ref.times.size() - 1) / (ref.times.back() - ref.times.front());
    return ref;
}

void write_prediction_csv(const std::string& path, const PredictionSeries& pred) {
    std::ostringstream out;
    out << (pred.postprocessed ? "t,spo2\n" : "t,spo2_raw\n");
    for (size_t i = 0; i < pred.times.size(); ++i)
        out << format_double(pred.times[i]) << ',' << format_double(pred.values[i]) << '\n';
    write_text_file(path, out.str());
}

PredictionSeries read_prediction_csv(const std::string& path) {
    CsvTable table = read_csv(path);
    const int ct = table.column("t");
    int cv;
    PredictionSeries pred;
    try {
        cv = table.column("spo2_raw");
        pred.postprocessed = false;
    } catch (const Error&) {
        cv = table.column("spo2");
        pred.postprocessed = true;
    }
    for (const auto& row : table.rows) {
        pred.times.push_back(parse_double(row[ct]));
        pred.values.push_back(parse_double(row[cv]));
    }
    return pred;
}

}  // namespace spo2
