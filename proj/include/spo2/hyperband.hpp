#ifndef SPO2_HYPERBAND_HPP
#define SPO2_HYPERBAND_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "spo2/common.hpp"

namespace spo2 {

// Search space over the tuned quantities: learning rate, filter counts,
// kernel sizes, node counts, dropout, batch norm.
struct SearchSpace {
    double lr_lo = 1e-4, lr_hi = 1e-2;  // log-uniform
    std::vector<int> filter_choices = {8, 12, 16, 24, 32, 48, 64};
    std::vector<int> kernel_choices = {5, 7, 9, 11};
    std::vector<int> node_choices = {8, 16, 32, 64};
    double dropout_lo = 0.0, dropout_hi = 0.5;
    bool search_batch_norm = true;
};

SearchSpace search_space_from_json_file(const std::string& path);

struct TunerConfig {
    double learning_rate = 1e-3;
    int filters = 16;
    int kernel = 9;
    int nodes = 16;
    double dropout_p = 0.0;
    bool batch_norm = false;
};

TunerConfig sample_config(const SearchSpace& space, Rng& rng);

struct Rung {
    int configs = 0;  // n_i
    int epochs = 0;   // r_i
};

struct Bracket {
    int s = 0;
    std::vector<Rung> rungs;
};

struct HyperbandPlan {
    int max_epochs = 0;  // R
    int eta = 0;
    std::vector<Bracket> brackets;  // s = s_max .. 0

    long total_epochs() const;  // sum of n_i * r_i over all rungs
};

// Standard HyperBand schedule: s_max = floor(log_eta R) + 1 brackets,
// bracket s starts with n = ceil((s_max+1) * eta^s / (s+1)) configs at
// r = R * eta^-s epochs. Throws BadBudget unless R >= eta >= 2.
HyperbandPlan plan(int max_epochs, int eta);

// validation RMSE of a configuration trained for the given epoch budget
using Objective = std::function<double(const TunerConfig&, int epochs, std::uint64_t seed)>;

struct TuningLogRow {
    int bracket = 0;
    int rung = 0;
    int config_id = 0;
    int epochs = 0;
    double val_rmse = 0.0;
};

struct TuningResult {
    TunerConfig best_config;
    double best_val_rmse = 0.0;
    long epochs_spent = 0;
    std::vector<TuningLogRow> log;
};

// Successive halving within each bracket; survivors are the top floor(n/eta)
// by objective, ties broken by config index. Deterministic given seed.
TuningResult run_hyperband(const SearchSpace& space, const HyperbandPlan& plan, const Objective& objective,
                           std::uint64_t seed);

void write_tuning_log_csv(const std::string& path, const std::vector<TuningLogRow>& log);

}  // namespace spo2

#endif
