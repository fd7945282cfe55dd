#ifndef SPO2_NN_HPP
#define SPO2_NN_HPP

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "spo2/common.hpp"

namespace spo2::nn {

// Batched signal tensor: n samples, c channels, l points; dense layers use l == 1.
struct Tensor {
    int n = 0, c = 0, l = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int n_, int c_, int l_) : n(n_), c(c_), l(l_), v(static_cast<size_t>(n_) * c_ * l_, 0.0) {}

    double& at(int i, int j, int k) { return v[(static_cast<size_t>(i) * c + j) * l + k]; }
    const double& at(int i, int j, int k) const { return v[(static_cast<size_t>(i) * c + j) * l + k]; }
    size_t size() const { return v.size(); }
};

class Layer {
public:
    virtual ~Layer() = default;

    // training=true caches activations for backward; rng drives dropout masks
    virtual Tensor forward(const Tensor& x, bool training, Rng* rng) = 0;
    // consumes the cache of the last training-mode forward
    virtual Tensor backward(const Tensor& dy) = 0;

    virtual std::span<double> params() { return {}; }
    virtual std::span<double> grads() { return {}; }
    virtual std::string kind() const = 0;
    virtual void save(nlohmann::json& j) const = 0;

    void zero_grads() {
        for (auto& g : grads()) g = 0.0;
    }
};

// V = act(W U + b 1^T) applied along the time axis; mixes channels only.
class ChannelCombination : public Layer {
public:
    ChannelCombination(int c_in, int c_out, bool relu);

    Tensor forward(const Tensor& x, bool training, Rng* rng) override;
    Tensor backward(const Tensor& dy) override;
    std::span<double> params() override { return params_; }
    std::span<double> grads() override { return grads_; }
    std::string kind() const override { return "channel_combination"; }
    void save(nlohmann::json& j) const override;

    int c_in() const { return c_in_; }
    int c_out() const { return c_out_; }
    bool relu() const { return relu_; }
    // W row for one output channel (c_in weights)
    std::span<const double> weight_row(int out_channel) const;

private:
    int c_in_, c_out_;
    bool relu_;
    std::vector<double> params_;  // W (c_out x c_in) then b (c_out)
    std::vector<double> grads_;
    Tensor cached_x_, cached_y_;
};

// Valid (no-pad) cross-correlation, stride 1, summed over input channels.
class Conv1D : public Layer {
public:
    Conv1D(int c_in, int filters, int kernel, bool relu);

    Tensor forward(const Tensor& x, bool training, Rng* rng) override;
    Tensor backward(const Tensor& dy) override;
    std::span<double> params() override { return params_; }
    std::span<double> grads() override { return grads_; }
    std::string kind() const override { return "conv1d"; }
    void save(nlohmann::json& j) const override;

    int c_in() const { return c_in_; }
    int filters() const { return filters_; }
    int kernel() const { return kernel_; }

private:
    int c_in_, filters_, kernel_;
    bool relu_;
    std::vector<double> params_;  // kernels (f x c_in x k) then bias (f)
    std::vector<double> grads_;
    Tensor cached_x_, cached_y_;
};

// Disjoint pairwise max, factor 2; odd trailing element dropped.
class MaxPool1D : public Layer {
public:
    Tensor forward(const Tensor& x, bool training, Rng* rng) override;
    Tensor backward(const Tensor& dy) override;
    std::string kind() const override { return "maxpool1d"; }
    void save(nlohmann::json& j) const override;

private:
    std::vector<int> argmax_;
    int in_l_ = 0, in_c_ = 0;
};

class Flatten : public Layer {
public:
    Tensor forward(const Tensor& x, bool training, Rng* rng) override;
    Tensor backward(const Tensor& dy) override;
    std::string kind() const override { return "flatten"; }
    void save(nlohmann::json& j) const override;

private:
    int in_c_ = 0, in_l_ = 0;
};

class Dense : public Layer {
public:
    Dense(int in, int out, bool relu);

    Tensor forward(const Tensor& x, bool training, Rng* rng) override;
    Tensor backward(const Tensor& dy) override;
    std::span<double> params() override { return params_; }
    std::span<double> grads() override { return grads_; }
    std::string kind() const override { return "dense"; }
    void save(nlohmann::json& j) const override;

    int in() const { return in_; }
    int out() const { return out_; }

private:
    int in_, out_;
    bool relu_;
    std::vector<double> params_;  // W (out x in) then b (out)
    std::vector<double> grads_;
    Tensor cached_x_, cached_y_;
};

// Inverted-scaling dropout; identity at inference.
class Dropout : public Layer {
public:
    explicit Dropout(double p);

    Tensor forward(const Tensor& x, bool training, Rng* rng) override;
    Tensor backward(const Tensor& dy) override;
    std::string kind() const override { return "dropout"; }
    void save(nlohmann::json& j) const override;

    double p() const { return p_; }

private:
    double p_;
    std::vector<double> mask_;
};

// Per-channel batch normalization over (batch x time); running statistics
// are used at inference.
class BatchNorm1D : public Layer {
public:
    explicit BatchNorm1D(int channels, double momentum = 0.1, double eps = 1e-5);

    Tensor forward(const Tensor& x, bool training, Rng* rng) override;
    Tensor backward(const Tensor& dy) override;
    std::span<double> params() override { return params_; }
    std::span<double> grads() override { return grads_; }
    std::string kind() const override { return "batch_norm1d"; }
    void save(nlohmann::json& j) const override;

    std::vector<double>& running_mean() { return running_mean_; }
    std::vector<double>& running_var() { return running_var_; }

private:
    int channels_;
    double momentum_, eps_;
    std::vector<double> params_;  // gamma then beta
    std::vector<double> grads_;
    std::vector<double> running_mean_, running_var_;
    Tensor cached_xhat_;
    std::vector<double> cached_inv_std_;
};

class Network;

// Unshared per-channel stacks: input channel i feeds branch i; branch
// outputs are concatenated along the channel axis.
class ChannelBranches : public Layer {
public:
    explicit ChannelBranches(std::vector<std::vector<std::unique_ptr<Layer>>> branches);

    Tensor forward(const Tensor& x, bool training, Rng* rng) override;
    Tensor backward(const Tensor& dy) override;
    std::string kind() const override { return "channel_branches"; }
    void save(nlohmann::json& j) const override;

    size_t branch_count() const { return branches_.size(); }
    const std::vector<std::unique_ptr<Layer>>& branch(size_t i) const { return branches_[i]; }
    void collect_param_views(std::vector<std::span<double>>& params, std::vector<std::span<double>>& grads);

private:
    std::vector<std::vector<std::unique_ptr<Layer>>> branches_;
    std::vector<int> out_channels_;
    int out_l_ = 0;
};

class Network {
public:
    Network() = default;
    Network(Network&&) = default;
    Network& operator=(Network&&) = default;

    void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

    Tensor forward(const Tensor& x, bool training = false, Rng* rng = nullptr);
    // dy: gradient of the loss w.r.t. the network output
    void backward(const Tensor& dy);

    size_t layer_count() const { return layers_.size(); }
    Layer& layer(size_t i) { return *layers_[i]; }
    const Layer& layer(size_t i) const { return *layers_[i]; }

    size_t param_count() const;
    void zero_grads();
    std::vector<std::span<double>> param_views();
    std::vector<std::span<double>> grad_views();
    std::vector<double> params_flat() const;
    void set_params_flat(const std::vector<double>& flat);

    // convenience: forward a batch and return the scalar outputs
    std::vector<double> predict_batch(const Tensor& x);

    nlohmann::json to_json() const;
    static Network from_json(const nlohmann::json& j);

    void save_checkpoint(const std::string& path, std::uint64_t seed) const;
    static Network load_checkpoint(const std::string& path, std::uint64_t* seed_out = nullptr);

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

std::unique_ptr<Layer> layer_from_json(const nlohmann::json& j);

// sqrt(mean((pred-target)^2) + eps); the epsilon keeps the gradient finite
// at zero residual.
inline constexpr double kRmseEpsilon = 1e-12;

double rmse_loss(std::span<const double> pred, std::span<const double> target);
std::vector<double> rmse_loss_grad(std::span<const double> pred, std::span<const double> target);

// He-style initialization of all parameter tensors, deterministic per rng.
void init_params(Network& net, Rng& rng);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    explicit Adam(const AdamConfig& cfg = {}) : cfg_(cfg) {}

    void step(const std::vector<std::span<double>>& params, const std::vector<std::span<double>>& grads);
    long steps_taken() const { return t_; }

private:
    AdamConfig cfg_;
    std::vector<double> m_, v_;
    long t_ = 0;
};

}  // namespace spo2::nn

#endif
