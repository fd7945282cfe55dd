#ifndef SPO2_EVAL_STATS_HPP
#define SPO2_EVAL_STATS_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "spo2/signal.hpp"

namespace spo2 {

// Clip above 100, then a centered 50-sample (10 s at 5 Hz) moving average;
// the window shrinks symmetrically at the series edges.
PredictionSeries postprocess(const PredictionSeries& raw);

struct MetricsReport {
    double rho = 0.0;
    double mae = 0.0;
    double rmse = 0.0;
    bool zero_variance = false;  // rho reported as 0
};

// Metrics over the timestamp overlap of prediction and reference.
// Throws NoOverlap when fewer than two common timestamps exist.
MetricsReport metrics(const PredictionSeries& pred, const ReferenceSeries& ref);

void write_metrics_csv(const std::string& path, const std::vector<std::string>& names,
                       const std::vector<MetricsReport>& reports);

struct Aggregate {
    double median = 0.0;
    double iqr = 0.0;
};

// Median and IQR with linear-interpolation quantiles (R-7).
Aggregate aggregate(const std::vector<double>& values);

double quantile_r7(std::vector<double> values, double p);

// ---------------------------------------------------------------- Bayesian two-group test

enum class RopeDecision { Accepted, Rejected, Undecided };

const char* rope_decision_name(RopeDecision d);

struct BestOptions {
    double rope_lo = -0.03, rope_hi = 0.03;
    int chains = 4;
    int warmup = 1500;
    int samples_per_chain = 2500;  // retained draws per chain
    double accept_threshold = 95.0;  // percent coverage
    double reject_threshold = 2.5;
    double rhat_limit = 1.01;
    std::uint64_t seed = 1;
};

struct GroupComparisonResult {
    std::vector<double> diff_samples;  // posterior draws of mu1 - mu2
    double mean_diff = 0.0;
    double rope_lo = 0.0, rope_hi = 0.0;
    double rope_coverage = 0.0;  // percent
    double rhat = 0.0;           // split-chain diagnostic for the mean difference
    RopeDecision decision = RopeDecision::Undecided;
};

// Two-group Bayesian estimation with Student-t likelihoods (shared normality
// parameter) and broad priors; adaptive Metropolis-within-Gibbs chains.
// Throws TooFewSamples (group < 2) and NonConvergence (split R-hat above the
// configured limit).
GroupComparisonResult best_test(const std::vector<double>& group_a, const std::vector<double>& group_b,
                                const BestOptions& opts = {});

void write_comparison_json(const std::string& path, const GroupComparisonResult& result);

// ---------------------------------------------------------------- weight projection

struct WeightProjectionRow {
    double w_r = 0.0, w_g = 0.0, w_b = 0.0;
    double rho = 0.0;
};

struct WeightProjection {
    std::vector<WeightProjectionRow> rows;
    double slope_blue_red = 0.0;   // fitted w_B/w_R over high-rho instances
    double slope_green_red = 0.0;  // fitted w_G/w_R
    double rho_cutoff = 0.0;
};

// Line through the origin fitted to instances with rho >= cutoff; cutoff
// defaults to the rho median so the fit uses the better half.
WeightProjection export_weight_projection(const std::vector<WeightProjectionRow>& instances,
                                          double rho_cutoff = -2.0);

void write_projection_csv(const std::string& path, const WeightProjection& projection);

}  // namespace spo2

#endif
