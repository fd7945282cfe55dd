#include "spo2/eval_stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spo2/common.hpp"

namespace spo2 {

using json = nlohmann::json;

PredictionSeries postprocess(const PredictionSeries& raw) {
    if (raw.postprocessed) throw Error(ErrorCode::ConfigError, "series is already postprocessed");
    const int n = static_cast<int>(raw.values.size());
    PredictionSeries out;
    out.times = raw.times;
    out.values.resize(n);
    out.postprocessed = true;

    // clipping happens before the moving average
    std::vector<double> clipped(raw.values);
    for (double& v : clipped) v = std::min(v, 100.0);

    // nominal window: 25 back, 24 forward (50 samples); when the window
    // would overrun an edge, both sides shrink together so it stays centered
    const int back = 25, fwd = 24;
    for (int i = 0; i < n; ++i) {
        int l = back, r = fwd;
        if (i < l || n - 1 - i < r) {
            const int half = std::min(i, n - 1 - i);
            l = std::min(l, half);
            r = std::min(r, half);
        }
        double sum = 0.0;
        for (int j = i - l; j <= i + r; ++j) sum += clipped[j];
        out.values[i] = sum / (l + r + 1);
    }
    return out;
}

MetricsReport metrics(const PredictionSeries& pred, const ReferenceSeries& ref) {
    // pair up by timestamp (tolerance half the prediction spacing)
    double tol = 1e-6;
    if (pred.times.size() >= 2) tol = 0.5 * (pred.times[1] - pred.times[0]);
    std::vector<double> p, r;
    size_t j = 0;
    for (size_t i = 0; i < pred.times.size(); ++i) {
        while (j < ref.times.size() && ref.times[j] < pred.times[i] - tol) ++j;
        if (j < ref.times.size() && std::abs(ref.times[j] - pred.times[i]) <= tol) {
            p.push_back(pred.values[i]);
            r.push_back(ref.values[j]);
        }
    }
    if (p.size() < 2) throw Error(ErrorCode::NoOverlap, "prediction and reference share no timestamps");

    MetricsReport report;
    const double n = static_cast<double>(p.size());
    double mean_p = 0.0, mean_r = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        mean_p += p[i];
        mean_r += r[i];
    }
    mean_p /= n;
    mean_r /= n;
    double spp = 0.0, srr = 0.0, spr = 0.0, abs_sum = 0.0, sq_sum = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        const double dp = p[i] - mean_p;
        const double dr = r[i] - mean_r;
        spp += dp * dp;
        srr += dr * dr;
        spr += dp * dr;
        const double e = p[i] - r[i];
        abs_sum += std::abs(e);
        sq_sum += e * e;
    }
    report.mae = abs_sum / n;
    report.rmse = std::sqrt(sq_sum / n);
    if (spp < 1e-18 || srr < 1e-18) {
        report.rho = 0.0;
        report.zero_variance = true;
    } else {
        report.rho = spr / std::sqrt(spp * srr);
    }
    return report;
}

void write_metrics_csv(const std::string& path, const std::vector<std::string>& names,
                       const std::vector<MetricsReport>& reports) {
    if (names.size() != reports.size()) throw Error(ErrorCode::ShapeMismatch, "metrics rows mismatch");
    std::ostringstream out;
    out << "recording,rho,mae,rmse,zero_variance\n";
    for (size_t i = 0; i < names.size(); ++i)
        out << names[i] << ',' << format_double(reports[i].rho) << ',' << format_double(reports[i].mae) << ','
            << format_double(reports[i].rmse) << ',' << (reports[i].zero_variance ? 1 : 0) << '\n';
    write_text_file(path, out.str());
}

double quantile_r7(std::vector<double> values, double p) {
    if (values.empty()) throw Error(ErrorCode::EmptyList, "quantile of empty list");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const size_t lo = static_cast<size_t>(std::floor(h));
    if (lo + 1 >= values.size()) return values.back();
    const double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

Aggregate aggregate(const std::vector<double>& values) {
    if (values.empty()) throw Error(ErrorCode::EmptyList, "aggregate of empty list");
    Aggregate agg;
    agg.median = quantile_r7(values, 0.5);
    agg.iqr = quantile_r7(values, 0.75) - quantile_r7(values, 0.25);
    return agg;
}

const char* rope_decision_name(RopeDecision d) {
    switch (d) {
        case RopeDecision::Accepted: return "Accepted";
        case RopeDecision::Rejected: return "Rejected";
        case RopeDecision::Undecided: return "Undecided";
    }
    return "Undecided";
}

void write_comparison_json(const std::string& path, const GroupComparisonResult& result) {
    json j;
    j["mean_diff"] = result.mean_diff;
    j["rope"] = {result.rope_lo, result.rope_hi};
    j["rope_coverage_percent"] = result.rope_coverage;
    j["rhat"] = result.rhat;
    j["decision"] = rope_decision_name(result.decision);
    j["posterior_samples"] = result.diff_samples.size();
    write_text_file(path, j.dump(2) + "\n");
}

WeightProjection export_weight_projection(const std::vector<WeightProjectionRow>& instances,
                                          double rho_cutoff) {
    WeightProjection out;
    out.rows = instances;
    if (instances.empty()) return out;

    if (rho_cutoff < -1.0) {
        std::vector<double> rhos;
        for (const auto& row : instances) rhos.push_back(row.rho);
        rho_cutoff = quantile_r7(rhos, 0.5);
    }
    out.rho_cutoff = rho_cutoff;

    // least-squares line through the origin in the RB and RG planes
    double srr = 0.0, srb = 0.0, srg = 0.0;
    for (const auto& row : instances) {
        if (row.rho < rho_cutoff) continue;
        srr += row.w_r * row.w_r;
        srb += row.w_r * row.w_b;
        srg += row.w_r * row.w_g;
    }
    if (srr > 0) {
        out.slope_blue_red = srb / srr;
        out.slope_green_red = srg / srr;
    }
    return out;
}

void write_projection_csv(const std::string& path, const WeightProjection& projection) {
    std::ostringstream out;
    out << "wR,wG,wB,rho\n";
    for (const auto& row : projection.rows)
        out << format_double(row.w_r) << ',' << format_double(row.w_g) << ',' << format_double(row.w_b)
            << ',' << format_double(row.rho) << '\n';
    write_text_file(path, out.str());
}

}  // namespace spo2
