#include "spo2/hyperband.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace spo2 {

using json = nlohmann::json;

SearchSpace search_space_from_json_file(const std::string& path) {
    json j = json::parse(read_text_file(path));
    SearchSpace space;
    if (j.contains("lr_lo")) space.lr_lo = j["lr_lo"].get<double>();
    if (j.contains("lr_hi")) space.lr_hi = j["lr_hi"].get<double>();
    if (j.contains("filter_choices")) space.filter_choices = j["filter_choices"].get<std::vector<int>>();
    if (j.contains("kernel_choices")) space.kernel_choices = j["kernel_choices"].get<std::vector<int>>();
    if (j.contains("node_choices")) space.node_choices = j["node_choices"].get<std::vector<int>>();
    if (j.contains("dropout_lo")) space.dropout_lo = j["dropout_lo"].get<double>();
    if (j.contains("dropout_hi")) space.dropout_hi = j["dropout_hi"].get<double>();
    if (j.contains("search_batch_norm")) space.search_batch_norm = j["search_batch_norm"].get<bool>();
    if (space.lr_lo <= 0 || space.lr_hi < space.lr_lo || space.filter_choices.empty() ||
        space.kernel_choices.empty() || space.node_choices.empty())
        throw Error(ErrorCode::ConfigError, path + ": invalid search space");
    return space;
}

TunerConfig sample_config(const SearchSpace& space, Rng& rng) {
    TunerConfig cfg;
    cfg.learning_rate = rng.log_uniform(space.lr_lo, space.lr_hi);
    cfg.filters = space.filter_choices[rng.uniform_u64(space.filter_choices.size())];
    cfg.kernel = space.kernel_choices[rng.uniform_u64(space.kernel_choices.size())];
    cfg.nodes = space.node_choices[rng.uniform_u64(space.node_choices.size())];
    cfg.dropout_p = rng.uniform(space.dropout_lo, space.dropout_hi);
    cfg.batch_norm = space.search_batch_norm ? (rng.uniform_u64(2) == 1) : false;
    return cfg;
}

long HyperbandPlan::total_epochs() const {
    long total = 0;
    for (const auto& bracket : brackets)
        for (const auto& rung : bracket.rungs) total += static_cast<long>(rung.configs) * rung.epochs;
    return total;
}

HyperbandPlan plan(int max_epochs, int eta) {
    if (eta < 2 || max_epochs < eta)
        throw Error(ErrorCode::BadBudget, "hyperband needs R >= eta >= 2");
    HyperbandPlan p;
    p.max_epochs = max_epochs;
    p.eta = eta;
    const int s_max = static_cast<int>(std::floor(std::log(max_epochs) / std::log(eta) + 1e-12));
    for (int s = s_max; s >= 0; --s) {
        Bracket bracket;
        bracket.s = s;
        const double eta_s = std::pow(eta, s);
        const int n = static_cast<int>(
            std::ceil(static_cast<double>(s_max + 1) * eta_s / (s + 1) - 1e-12));
        const double r = max_epochs / eta_s;
        for (int i = 0; i <= s; ++i) {
            Rung rung;
            rung.configs = static_cast<int>(std::floor(n / std::pow(eta, i) + 1e-12));
            rung.epochs = static_cast<int>(std::lround(r * std::pow(eta, i)));
            bracket.rungs.push_back(rung);
        }
        p.brackets.push_back(std::move(bracket));
    }
    return p;
}

TuningResult run_hyperband(const SearchSpace& space, const HyperbandPlan& plan, const Objective& objective,
                           std::uint64_t seed) {
    Rng rng(seed);
    TuningResult result;
    result.best_val_rmse = std::numeric_limits<double>::infinity();
    int next_config_id = 0;

    for (const auto& bracket : plan.brackets) {
        struct Candidate {
            int id;
            TunerConfig config;
            double score = 0.0;
        };
        std::vector<Candidate> alive;
        for (int i = 0; i < bracket.rungs.front().configs; ++i)
            alive.push_back({next_config_id++, sample_config(space, rng), 0.0});

        for (size_t rung_idx = 0; rung_idx < bracket.rungs.size(); ++rung_idx) {
            const Rung& rung = bracket.rungs[rung_idx];
            // keep the top n_i from the previous rung, ties by config index
            if (alive.size() > static_cast<size_t>(rung.configs)) {
                std::stable_sort(alive.begin(), alive.end(), [](const Candidate& a, const Candidate& b) {
                    if (a.score != b.score) return a.score < b.score;
                    return a.id < b.id;
                });
                alive.resize(rung.configs);
            }
            for (auto& cand : alive) {
                try {
                    cand.score = objective(cand.config, rung.epochs, seed);
                } catch (const Error& e) {
                    throw Error(e.code(),
                                "config " + std::to_string(cand.id) + " failed: " + e.what());
                }
                result.epochs_spent += rung.epochs;
                result.log.push_back({bracket.s, static_cast<int>(rung_idx), cand.id, rung.epochs, cand.score});
                if (cand.score < result.best_val_rmse) {
                    result.best_val_rmse = cand.score;
                    result.best_config = cand.config;
                }
            }
        }
    }
    return result;
}

void write_tuning_log_csv(const std::string& path, const std::vector<TuningLogRow>& log) {
    std::string out = "bracket,rung,config_id,epochs,val_rmse\n";
    for (const auto& row : log)
        out += std::to_string(row.bracket) + ',' + std::to_string(row.rung) + ',' +
               std::to_string(row.config_id) + ',' + std::to_string(row.epochs) + ',' +
               format_double(row.val_rmse) + '\n';
    write_text_file(path, out);
}

}  // namespace spo2
