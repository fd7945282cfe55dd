#include <algorithm>
#include <cmath>

#include "spo2/common.hpp"
#include "spo2/eval_stats.hpp"

namespace spo2 {

namespace {

// Kruschke-style robust model: per group k,
//   y_ki ~ StudentT(nu, mu_k, sigma_k)       (nu shared)
//   mu_k ~ Normal(pooled_mean, 1000 * pooled_sd)
//   sigma_k ~ Uniform(pooled_sd/1000, pooled_sd*1000)
//   nu - 1 ~ Exponential(mean 29)
// Sampled in (mu1, mu2, log sigma1, log sigma2, log(nu-1)).
struct BestModel {
    const std::vector<double>& y1;
    const std::vector<double>& y2;
    double pooled_mean = 0.0;
    double pooled_sd = 1.0;
    double log_sigma_lo = 0.0, log_sigma_hi = 0.0;

    BestModel(const std::vector<double>& a, const std::vector<double>& b) : y1(a), y2(b) {
        double sum = 0.0;
        for (double v : y1) sum += v;
        for (double v : y2) sum += v;
        const double n = static_cast<double>(y1.size() + y2.size());
        pooled_mean = sum / n;
        double ss = 0.0;
        for (double v : y1) ss += (v - pooled_mean) * (v - pooled_mean);
        for (double v : y2) ss += (v - pooled_mean) * (v - pooled_mean);
        pooled_sd = std::sqrt(ss / (n - 1.0));
        if (pooled_sd < 1e-9) pooled_sd = 1e-9;
        log_sigma_lo = std::log(pooled_sd / 1000.0);
        log_sigma_hi = std::log(pooled_sd * 1000.0);
    }

    static double group_loglik(const std::vector<double>& y, double mu, double log_sigma, double nu,
                               double t_const) {
        const double sigma = std::exp(log_sigma);
        double ll = static_cast<double>(y.size()) * (t_const - log_sigma);
        const double half = 0.5 * (nu + 1.0);
        for (double v : y) {
            const double z = (v - mu) / sigma;
            ll -= half * std::log1p(z * z / nu);
        }
        return ll;
    }

    // theta: mu1, mu2, log_sigma1, log_sigma2, log(nu-1)
    double log_posterior(const double* theta) const {
        const double ls1 = theta[2], ls2 = theta[3];
        if (ls1 < log_sigma_lo || ls1 > log_sigma_hi || ls2 < log_sigma_lo || ls2 > log_sigma_hi)
            return -std::numeric_limits<double>::infinity();
        const double nu = 1.0 + std::exp(theta[4]);
        const double t_const =
            std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * M_PI);

        double lp = group_loglik(y1, theta[0], ls1, nu, t_const) +
                    group_loglik(y2, theta[1], ls2, nu, t_const);
        // mu priors
        const double prior_sd = 1000.0 * pooled_sd;
        for (int k = 0; k < 2; ++k) {
            const double d = (theta[k] - pooled_mean) / prior_sd;
            lp -= 0.5 * d * d;
        }
        // sigma: uniform in sigma-space, log-space Jacobian e^ls
        lp += ls1 + ls2;
        // nu: exponential on nu-1 with mean 29, Jacobian e^lambda
        lp += -(nu - 1.0) / 29.0 + theta[4];
        return lp;
    }
};

double split_rhat(const std::vector<std::vector<double>>& chains) {
    std::vector<std::vector<const double*>> halves;
    std::vector<size_t> lengths;
    for (const auto& chain : chains) {
        const size_t half = chain.size() / 2;
        if (half < 2) throw Error(ErrorCode::NonConvergence, "chains too short for split diagnostic");
        halves.push_back({chain.data(), chain.data() + half});
        lengths.push_back(half);
    }
    const size_t m = chains.size() * 2;
    const size_t ns = lengths.front();
    std::vector<double> means;
    std::vector<double> vars;
    for (size_t c = 0; c < chains.size(); ++c) {
        for (int h = 0; h < 2; ++h) {
            const double* seq = halves[c][h];
            double mean = 0.0;
            for (size_t i = 0; i < ns; ++i) mean += seq[i];
            mean /= static_cast<double>(ns);
            double var = 0.0;
            for (size_t i = 0; i < ns; ++i) var += (seq[i] - mean) * (seq[i] - mean);
            var /= static_cast<double>(ns - 1);
            means.push_back(mean);
            vars.push_back(var);
        }
    }
    double grand = 0.0;
    for (double v : means) grand += v;
    grand /= static_cast<double>(m);
    double b = 0.0;
    for (double v : means) b += (v - grand) * (v - grand);
    b *= static_cast<double>(ns) / static_cast<double>(m - 1);
    double w = 0.0;
    for (double v : vars) w += v;
    w /= static_cast<double>(m);
    if (w < 1e-300) return b < 1e-300 ? 1.0 : std::numeric_limits<double>::infinity();
    const double var_plus = (static_cast<double>(ns - 1) / ns) * w + b / static_cast<double>(ns);
    return std::sqrt(var_plus / w);
}

}  // namespace

GroupComparisonResult best_test(const std::vector<double>& group_a, const std::vector<double>& group_b,
                                const BestOptions& opts) {
    if (group_a.size() < 2 || group_b.size() < 2)
        throw Error(ErrorCode::TooFewSamples, "each group needs at least two values");
    if (opts.rope_hi <= opts.rope_lo) throw Error(ErrorCode::ConfigError, "empty ROPE interval");

    const BestModel model(group_a, group_b);

    auto group_stats = [](const std::vector<double>& y) {
        double mean = 0.0;
        for (double v : y) mean += v;
        mean /= static_cast<double>(y.size());
        double var = 0.0;
        for (double v : y) var += (v - mean) * (v - mean);
        var /= static_cast<double>(y.size() - 1);
        return std::pair<double, double>(mean, std::sqrt(var));
    };
    const auto [mean1, sd1] = group_stats(group_a);
    const auto [mean2, sd2] = group_stats(group_b);

    Rng master(opts.seed);
    std::vector<std::vector<double>> diff_chains(opts.chains);
    std::vector<std::vector<double>> mu1_chains(opts.chains);

    for (int chain = 0; chain < opts.chains; ++chain) {
        Rng rng = master.child(static_cast<std::uint64_t>(chain) + 1);
        double theta[5];
        theta[0] = mean1 + 0.1 * std::max(sd1, 1e-6) * rng.normal();
        theta[1] = mean2 + 0.1 * std::max(sd2, 1e-6) * rng.normal();
        theta[2] = std::clamp(std::log(std::max(sd1, model.pooled_sd / 100.0)), model.log_sigma_lo,
                              model.log_sigma_hi);
        theta[3] = std::clamp(std::log(std::max(sd2, model.pooled_sd / 100.0)), model.log_sigma_lo,
                              model.log_sigma_hi);
        theta[4] = std::log(9.0) + 0.2 * rng.normal();

        double step[5] = {model.pooled_sd / std::sqrt(static_cast<double>(group_a.size())),
                          model.pooled_sd / std::sqrt(static_cast<double>(group_b.size())), 0.3, 0.3, 0.7};
        int accepted[5] = {0, 0, 0, 0, 0};
        int proposed[5] = {0, 0, 0, 0, 0};

        double lp = model.log_posterior(theta);
        diff_chains[chain].reserve(opts.samples_per_chain);
        mu1_chains[chain].reserve(opts.samples_per_chain);

        const int total = opts.warmup + opts.samples_per_chain;
        for (int iter = 0; iter < total; ++iter) {
            for (int d = 0; d < 5; ++d) {
                const double old = theta[d];
                theta[d] = old + step[d] * rng.normal();
                const double lp_new = model.log_posterior(theta);
                ++proposed[d];
                if (std::log(rng.uniform() + 1e-300) < lp_new - lp) {
                    lp = lp_new;
                    ++accepted[d];
                } else {
                    theta[d] = old;
                }
            }
            // adapt per-coordinate steps toward ~0.44 acceptance during warmup
            if (iter < opts.warmup && (iter + 1) % 50 == 0) {
                for (int d = 0; d < 5; ++d) {
                    const double rate = static_cast<double>(accepted[d]) / proposed[d];
                    if (rate > 0.5)
                        step[d] *= 1.2;
                    else if (rate < 0.3)
                        step[d] *= 0.8;
                    accepted[d] = 0;
                    proposed[d] = 0;
                }
            }
            if (iter >= opts.warmup) {
                diff_chains[chain].push_back(theta[0] - theta[1]);
                mu1_chains[chain].push_back(theta[0]);
            }
        }
    }

    GroupComparisonResult result;
    result.rope_lo = opts.rope_lo;
    result.rope_hi = opts.rope_hi;
    result.rhat = std::max(split_rhat(diff_chains), split_rhat(mu1_chains));
    if (!(result.rhat <= opts.rhat_limit))
        throw Error(ErrorCode::NonConvergence,
                    "split R-hat " + format_double(result.rhat) + " above " + format_double(opts.rhat_limit));

    for (const auto& chain : diff_chains)
        result.diff_samples.insert(result.diff_samples.end(), chain.begin(), chain.end());

    double mean = 0.0;
    size_t inside = 0;
    for (double d : result.diff_samples) {
        mean += d;
        if (d >= opts.rope_lo && d <= opts.rope_hi) ++inside;
    }
    result.mean_diff = mean / static_cast<double>(result.diff_samples.size());
    result.rope_coverage = 100.0 * static_cast<double>(inside) / static_cast<double>(result.diff_samples.size());

    if (result.rope_coverage > opts.accept_threshold)
        result.decision = RopeDecision::Accepted;
    else if (result.rope_coverage < opts.reject_threshold)
        result.decision = RopeDecision::Rejected;
    else
        result.decision = RopeDecision::Undecided;
    return result;
}

}  // namespace spo2
