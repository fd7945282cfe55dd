#ifndef SPO2_MODEL_ZOO_HPP
#define SPO2_MODEL_ZOO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "spo2/dataset.hpp"
#include "spo2/nn.hpp"
#include "spo2/signal.hpp"

namespace spo2 {

enum class ModelKind {
    Model1,         // channel mixing, then temporal feature extraction
    Model2,         // per-channel feature extraction, then channel mixing
    Model3,         // interleaved conv + pool with decreasing filter counts
    Model1LinearCC,  // ablation: single linear channel combination
    Model1DenseFE,   // ablation: dense layers instead of convolutions
    DingBaseline,    // prior-art topology: like Model 3 with fewer layers
};

const char* model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

struct NetworkSpec {
    ModelKind kind = ModelKind::Model1;
    int input_length = 300;
    std::vector<int> cc_channels;    // channel combination widths (last one feeds features)
    std::vector<int> conv_filters;   // one per feature-extraction block
    std::vector<int> conv_kernels;
    std::vector<int> dense_nodes;    // hidden widths for the dense-feature ablation
    double dropout_p = 0.0;
    bool batch_norm = false;
    bool enforce_budget = true;  // hyperband-sampled variants roam off-budget
    std::uint64_t seed = 1;
};

// Defaults are calibrated to the published trainable-parameter budgets for
// Models 1-3 (34K / 12K / 307K).
NetworkSpec default_spec(ModelKind kind);

NetworkSpec spec_from_json_file(const std::string& path);
void spec_to_json_file(const std::string& path, const NetworkSpec& spec);

// Builds and seeds the network; throws SpecInvalid when a Model 1/2/3 build
// misses its parameter budget by more than 20%.
nn::Network build_model(const NetworkSpec& spec);

size_t expected_param_budget(ModelKind kind);  // 0 when unconstrained

struct TrainingConfig {
    double learning_rate = 1e-3;
    int epochs = 200;
    int batch_size = 64;
    size_t oversample_train_to = 0;  // 0 = no bootstrap oversampling
    size_t oversample_val_to = 0;
    std::uint64_t seed = 1;
};

struct EpochStats {
    int epoch = 0;
    double train_rmse = 0.0;
    double val_rmse = 0.0;
};

struct TrainResult {
    nn::Network network;  // weights from the best-validation epoch
    std::vector<EpochStats> history;
    int best_epoch = 0;
    double best_val_rmse = 0.0;
};

// Minibatch Adam on the RMSE loss; returns the weights from the epoch with
// the lowest validation RMSE. Deterministic given cfg.seed.
TrainResult train(nn::Network network, const SegmentDataset& train_ds, const SegmentDataset& val_ds,
                  const TrainingConfig& cfg);

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history);

double evaluate_rmse(nn::Network& network, const SegmentDataset& ds, int batch_size = 256);

// One raw prediction per sliding window (window end timestamps, 5 Hz at
// 30 fps). No clipping or smoothing; see eval_stats postprocess.
PredictionSeries predict_recording(nn::Network& network, const SkinColorSignal& signal,
                                   const WindowOptions& opts = {});

// First-layer RGB weights of the linear-combination ablation.
std::array<double, 3> linear_cc_weights(const nn::Network& network);

}  // namespace spo2

#endif
