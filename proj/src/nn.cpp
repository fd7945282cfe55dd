#include "spo2/nn.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace spo2::nn {

using json = nlohmann::json;

namespace {

void check(bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::ShapeMismatch, what);
}

void save_params(json& j, const std::vector<double>& p) { j["params"] = p; }

std::vector<double> load_params(const json& j, size_t expected) {
    auto p = j.at("params").get<std::vector<double>>();
    if (p.size() != expected) throw Error(ErrorCode::IoError, "checkpoint parameter size mismatch");
    return p;
}

}  // namespace

// ---------------------------------------------------------------- ChannelCombination

ChannelCombination::ChannelCombination(int c_in, int c_out, bool relu)
    : c_in_(c_in), c_out_(c_out), relu_(relu) {
    check(c_in > 0 && c_out > 0, "channel combination needs positive channel counts");
    params_.assign(static_cast<size_t>(c_out) * c_in + c_out, 0.0);
    grads_.assign(params_.size(), 0.0);
}

std::span<const double> ChannelCombination::weight_row(int out_channel) const {
    return {params_.data() + static_cast<size_t>(out_channel) * c_in_, static_cast<size_t>(c_in_)};
}

Tensor ChannelCombination::forward(const Tensor& x, bool training, Rng*) {
    check(x.c == c_in_, "channel combination input channels");
    const double* W = params_.data();
    const double* b = params_.data() + static_cast<size_t>(c_out_) * c_in_;
    Tensor y(x.n, c_out_, x.l);
    for (int i = 0; i < x.n; ++i) {
        for (int o = 0; o < c_out_; ++o) {
            double* yo = &y.at(i, o, 0);
            const double bias = b[o];
            for (int k = 0; k < x.l; ++k) yo[k] = bias;
            for (int c = 0; c < c_in_; ++c) {
                const double w = W[static_cast<size_t>(o) * c_in_ + c];
                const double* xc = &x.at(i, c, 0);
                for (int k = 0; k < x.l; ++k) yo[k] += w * xc[k];
            }
            if (relu_)
                for (int k = 0; k < x.l; ++k) yo[k] = std::max(0.0, yo[k]);
        }
    }
    if (training) {
        cached_x_ = x;
        cached_y_ = y;
    }
    return y;
}

Tensor ChannelCombination::backward(const Tensor& dy) {
    const Tensor& x = cached_x_;
    check(dy.n == x.n && dy.c == c_out_ && dy.l == x.l, "channel combination backward shape");
    double* dW = grads_.data();
    double* db = grads_.data() + static_cast<size_t>(c_out_) * c_in_;
    const double* W = params_.data();
    Tensor dx(x.n, c_in_, x.l);
    std::vector<double> dpre(x.l);
    for (int i = 0; i < x.n; ++i) {
        for (int o = 0; o < c_out_; ++o) {
            const double* dyo = &dy.at(i, o, 0);
            const double* yo = &cached_y_.at(i, o, 0);
            for (int k = 0; k < x.l; ++k) dpre[k] = relu_ ? (yo[k] > 0.0 ? dyo[k] : 0.0) : dyo[k];
            double dbo = 0.0;
            for (int k = 0; k < x.l; ++k) dbo += dpre[k];
            db[o] += dbo;
            for (int c = 0; c < c_in_; ++c) {
                const double* xc = &x.at(i, c, 0);
                double* dxc = &dx.at(i, c, 0);
                const double w = W[static_cast<size_t>(o) * c_in_ + c];
                double dw = 0.0;
                for (int k = 0; k < x.l; ++k) {
                    dw += dpre[k] * xc[k];
                    dxc[k] += w * dpre[k];
                }
                dW[static_cast<size_t>(o) * c_in_ + c] += dw;
            }
        }
    }
    return dx;
}

void ChannelCombination::save(json& j) const {
    j["kind"] = kind();
    j["c_in"] = c_in_;
    j["c_out"] = c_out_;
    j["relu"] = relu_;
    save_params(j, params_);
}

// ---------------------------------------------------------------- Conv1D

Conv1D::Conv1D(int c_in, int filters, int kernel, bool relu)
    : c_in_(c_in), filters_(filters), kernel_(kernel), relu_(relu) {
    check(c_in > 0 && filters > 0 && kernel > 0, "conv1d needs positive dimensions");
    params_.assign(static_cast<size_t>(filters) * c_in * kernel + filters, 0.0);
    grads_.assign(params_.size(), 0.0);
}

Tensor Conv1D::forward(const Tensor& x, bool training, Rng*) {
    check(x.c == c_in_, "conv1d input channels");
    check(x.l >= kernel_, "conv1d input shorter than kernel");
    const int out_l = x.l - kernel_ + 1;
    const double* W = params_.data();
    const double* b = params_.data() + static_cast<size_t>(filters_) * c_in_ * kernel_;
    Tensor y(x.n, filters_, out_l);
    for (int i = 0; i < x.n; ++i) {
        for (int f = 0; f < filters_; ++f) {
            double* yf = &y.at(i, f, 0);
            const double bias = b[f];
            for (int t = 0; t < out_l; ++t) yf[t] = bias;
            for (int c = 0; c < c_in_; ++c) {
                const double* xc = &x.at(i, c, 0);
                const double* wfc = W + (static_cast<size_t>(f) * c_in_ + c) * kernel_;
                for (int j = 0; j < kernel_; ++j) {
                    const double w = wfc[j];
                    const double* xs = xc + j;
                    for (int t = 0; t < out_l; ++t) yf[t] += w * xs[t];
                }
            }
            if (relu_)
                for (int t = 0; t < out_l; ++t) yf[t] = std::max(0.0, yf[t]);
        }
    }
    if (training) {
        cached_x_ = x;
        cached_y_ = y;
    }
    return y;
}

Tensor Conv1D::backward(const Tensor& dy) {
    const Tensor& x = cached_x_;
    const int out_l = x.l - kernel_ + 1;
    check(dy.n == x.n && dy.c == filters_ && dy.l == out_l, "conv1d backward shape");
    double* dW = grads_.data();
    double* db = grads_.data() + static_cast<size_t>(filters_) * c_in_ * kernel_;
    const double* W = params_.data();
    Tensor dx(x.n, c_in_, x.l);
    std::vector<double> dpre(out_l);
    for (int i = 0; i < x.n; ++i) {
        for (int f = 0; f < filters_; ++f) {
            const double* dyf = &dy.at(i, f, 0);
            const double* yf = &cached_y_.at(i, f, 0);
            for (int t = 0; t < out_l; ++t) dpre[t] = relu_ ? (yf[t] > 0.0 ? dyf[t] : 0.0) : dyf[t];
            double dbf = 0.0;
            for (int t = 0; t < out_l; ++t) dbf += dpre[t];
            db[f] += dbf;
            for (int c = 0; c < c_in_; ++c) {
                const double* xc = &x.at(i, c, 0);
                double* dxc = &dx.at(i, c, 0);
                const double* wfc = W + (static_cast<size_t>(f) * c_in_ + c) * kernel_;
                double* dwfc = dW + (static_cast<size_t>(f) * c_in_ + c) * kernel_;
                for (int j = 0; j < kernel_; ++j) {
                    const double w = wfc[j];
                    double dwj = 0.0;
                    const double* xs = xc + j;
                    double* dxs = dxc + j;
                    for (int t = 0; t < out_l; ++t) {
                        dwj += dpre[t] * xs[t];
                        dxs[t] += w * dpre[t];
                    }
                    dwfc[j] += dwj;
                }
            }
        }
    }
    return dx;
}

void Conv1D::save(json& j) const {
    j["kind"] = kind();
    j["c_in"] = c_in_;
    j["filters"] = filters_;
    j["kernel"] = kernel_;
    j["relu"] = relu_;
    save_params(j, params_);
}

// ---------------------------------------------------------------- MaxPool1D

Tensor MaxPool1D::forward(const Tensor& x, bool training, Rng*) {
    check(x.l >= 2, "maxpool1d input too short");
    const int out_l = x.l / 2;
    Tensor y(x.n, x.c, out_l);
    if (training) {
        argmax_.assign(static_cast<size_t>(x.n) * x.c * out_l, 0);
        in_l_ = x.l;
        in_c_ = x.c;
    }
    for (int i = 0; i < x.n; ++i)
        for (int c = 0; c < x.c; ++c) {
            const double* xc = &x.at(i, c, 0);
            double* yc = &y.at(i, c, 0);
            for (int t = 0; t < out_l; ++t) {
                const double a = xc[2 * t], b = xc[2 * t + 1];
                const int pick = (b > a) ? 2 * t + 1 : 2 * t;  // ties keep the first
                yc[t] = xc[pick];
                if (training) argmax_[(static_cast<size_t>(i) * x.c + c) * out_l + t] = pick;
            }
        }
    return y;
}

Tensor MaxPool1D::backward(const Tensor& dy) {
    check(!argmax_.empty(), "maxpool1d backward without forward");
    Tensor dx(dy.n, dy.c, in_l_);
    const int out_l = dy.l;
    for (int i = 0; i < dy.n; ++i)
        for (int c = 0; c < dy.c; ++c) {
            double* dxc = &dx.at(i, c, 0);
            const double* dyc = &dy.at(i, c, 0);
            for (int t = 0; t < out_l; ++t)
                dxc[argmax_[(static_cast<size_t>(i) * dy.c + c) * out_l + t]] += dyc[t];
        }
    return dx;
}

void MaxPool1D::save(json& j) const { j["kind"] = kind(); }

// ---------------------------------------------------------------- Flatten

Tensor Flatten::forward(const Tensor& x, bool training, Rng*) {
    if (training) {
        in_c_ = x.c;
        in_l_ = x.l;
    }
    Tensor y(x.n, x.c * x.l, 1);
    y.v = x.v;
    return y;
}

Tensor Flatten::backward(const Tensor& dy) {
    Tensor dx(dy.n, in_c_, in_l_);
    dx.v = dy.v;
    return dx;
}

void Flatten::save(json& j) const { j["kind"] = kind(); }

// ---------------------------------------------------------------- Dense

Dense::Dense(int in, int out, bool relu) : in_(in), out_(out), relu_(relu) {
    check(in > 0 && out > 0, "dense needs positive dimensions");
    params_.assign(static_cast<size_t>(out) * in + out, 0.0);
    grads_.assign(params_.size(), 0.0);
}

Tensor Dense::forward(const Tensor& x, bool training, Rng*) {
    check(x.c == in_ && x.l == 1, "dense input shape");
    const double* W = params_.data();
    const double* b = params_.data() + static_cast<size_t>(out_) * in_;
    Tensor y(x.n, out_, 1);
    for (int i = 0; i < x.n; ++i) {
        const double* xi = &x.at(i, 0, 0);
        for (int o = 0; o < out_; ++o) {
            const double* wo = W + static_cast<size_t>(o) * in_;
            double s = b[o];
            for (int j = 0; j < in_; ++j) s += wo[j] * xi[j];
            y.at(i, o, 0) = relu_ ? std::max(0.0, s) : s;
        }
    }
    if (training) {
        cached_x_ = x;
        cached_y_ = y;
    }
    return y;
}

Tensor Dense::backward(const Tensor& dy) {
    const Tensor& x = cached_x_;
    check(dy.n == x.n && dy.c == out_ && dy.l == 1, "dense backward shape");
    double* dW = grads_.data();
    double* db = grads_.data() + static_cast<size_t>(out_) * in_;
    const double* W = params_.data();
    Tensor dx(x.n, in_, 1);
    for (int i = 0; i < x.n; ++i) {
        const double* xi = &x.at(i, 0, 0);
        double* dxi = &dx.at(i, 0, 0);
        for (int o = 0; o < out_; ++o) {
            double g = dy.at(i, o, 0);
            if (relu_ && cached_y_.at(i, o, 0) <= 0.0) g = 0.0;
            if (g == 0.0) continue;
            db[o] += g;
            const double* wo = W + static_cast<size_t>(o) * in_;
            double* dwo = dW + static_cast<size_t>(o) * in_;
            for (int j = 0; j < in_; ++j) {
                dwo[j] += g * xi[j];
                dxi[j] += g * wo[j];
            }
        }
    }
    return dx;
}

void Dense::save(json& j) const {
    j["kind"] = kind();
    j["in"] = in_;
    j["out"] = out_;
    j["relu"] = relu_;
    save_params(j, params_);
}

// ---------------------------------------------------------------- Dropout

Dropout::Dropout(double p) : p_(p) {
    if (p < 0.0 || p >= 1.0) throw Error(ErrorCode::ConfigError, "dropout p must be in [0,1)");
}

Tensor Dropout::forward(const Tensor& x, bool training, Rng* rng) {
    if (!training || p_ == 0.0) {
        mask_.clear();
        return x;
    }
    if (!rng) throw Error(ErrorCode::ConfigError, "dropout in training mode needs an rng");
    mask_.resize(x.size());
    const double scale = 1.0 / (1.0 - p_);
    Tensor y = x;
    for (size_t i = 0; i < x.size(); ++i) {
        mask_[i] = (rng->uniform() < p_) ? 0.0 : scale;
        y.v[i] *= mask_[i];
    }
    return y;
}

Tensor Dropout::backward(const Tensor& dy) {
    if (mask_.empty()) return dy;
    Tensor dx = dy;
    for (size_t i = 0; i < dx.size(); ++i) dx.v[i] *= mask_[i];
    return dx;
}

void Dropout::save(json& j) const {
    j["kind"] = kind();
    j["p"] = p_;
}

// ---------------------------------------------------------------- BatchNorm1D

BatchNorm1D::BatchNorm1D(int channels, double momentum, double eps)
    : channels_(channels), momentum_(momentum), eps_(eps) {
    check(channels > 0, "batch norm needs positive channels");
    params_.assign(2 * static_cast<size_t>(channels), 0.0);
    for (int c = 0; c < channels; ++c) params_[c] = 1.0;  // gamma
    grads_.assign(params_.size(), 0.0);
    running_mean_.assign(channels, 0.0);
    running_var_.assign(channels, 1.0);
}

Tensor BatchNorm1D::forward(const Tensor& x, bool training, Rng*) {
    check(x.c == channels_, "batch norm channels");
    const double* gamma = params_.data();
    const double* beta = params_.data() + channels_;
    Tensor y(x.n, x.c, x.l);
    if (training) {
        cached_xhat_ = Tensor(x.n, x.c, x.l);
        cached_inv_std_.assign(channels_, 0.0);
        const double m = static_cast<double>(x.n) * x.l;
        for (int c = 0; c < channels_; ++c) {
            double mean = 0.0;
            for (int i = 0; i < x.n; ++i)
                for (int k = 0; k < x.l; ++k) mean += x.at(i, c, k);
            mean /= m;
            double var = 0.0;
            for (int i = 0; i < x.n; ++i)
                for (int k = 0; k < x.l; ++k) {
                    const double d = x.at(i, c, k) - mean;
                    var += d * d;
                }
            var /= m;
            const double inv = 1.0 / std::sqrt(var + eps_);
            cached_inv_std_[c] = inv;
            running_mean_[c] = (1 - momentum_) * running_mean_[c] + momentum_ * mean;
            running_var_[c] = (1 - momentum_) * running_var_[c] + momentum_ * var;
            for (int i = 0; i < x.n; ++i)
                for (int k = 0; k < x.l; ++k) {
                    const double xhat = (x.at(i, c, k) - mean) * inv;
                    cached_xhat_.at(i, c, k) = xhat;
                    y.at(i, c, k) = gamma[c] * xhat + beta[c];
                }
        }
    } else {
        for (int c = 0; c < channels_; ++c) {
            const double inv = 1.0 / std::sqrt(running_var_[c] + eps_);
            for (int i = 0; i < x.n; ++i)
                for (int k = 0; k < x.l; ++k)
                    y.at(i, c, k) = gamma[c] * (x.at(i, c, k) - running_mean_[c]) * inv + beta[c];
        }
    }
    return y;
}

Tensor BatchNorm1D::backward(const Tensor& dy) {
    const Tensor& xhat = cached_xhat_;
    check(dy.n == xhat.n && dy.c == channels_ && dy.l == xhat.l, "batch norm backward shape");
    const double* gamma = params_.data();
    double* dgamma = grads_.data();
    double* dbeta = grads_.data() + channels_;
    const double m = static_cast<double>(dy.n) * dy.l;
    Tensor dx(dy.n, dy.c, dy.l);
    for (int c = 0; c < channels_; ++c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int i = 0; i < dy.n; ++i)
            for (int k = 0; k < dy.l; ++k) {
                const double g = dy.at(i, c, k);
                sum_dy += g;
                sum_dy_xhat += g * xhat.at(i, c, k);
            }
        dbeta[c] += sum_dy;
        dgamma[c] += sum_dy_xhat;
        const double scale = gamma[c] * cached_inv_std_[c];
        for (int i = 0; i < dy.n; ++i)
            for (int k = 0; k < dy.l; ++k)
                dx.at(i, c, k) = scale * (dy.at(i, c, k) - sum_dy / m - xhat.at(i, c, k) * sum_dy_xhat / m);
    }
    return dx;
}

void BatchNorm1D::save(json& j) const {
    j["kind"] = kind();
    j["channels"] = channels_;
    j["momentum"] = momentum_;
    j["eps"] = eps_;
    j["running_mean"] = running_mean_;
    j["running_var"] = running_var_;
    save_params(j, params_);
}

// ---------------------------------------------------------------- ChannelBranches

ChannelBranches::ChannelBranches(std::vector<std::vector<std::unique_ptr<Layer>>> branches)
    : branches_(std::move(branches)) {
    check(!branches_.empty(), "channel branches need at least one branch");
}

Tensor ChannelBranches::forward(const Tensor& x, bool training, Rng* rng) {
    check(x.c == static_cast<int>(branches_.size()), "one input channel per branch");
    std::vector<Tensor> outs;
    outs.reserve(branches_.size());
    out_channels_.assign(branches_.size(), 0);
    int total_c = 0;
    for (size_t b = 0; b < branches_.size(); ++b) {
        Tensor t(x.n, 1, x.l);
        for (int i = 0; i < x.n; ++i)
            for (int k = 0; k < x.l; ++k) t.at(i, 0, k) = x.at(i, static_cast<int>(b), k);
        for (auto& layer : branches_[b]) t = layer->forward(t, training, rng);
        if (b == 0)
            out_l_ = t.l;
        else
            check(t.l == out_l_, "branch output lengths differ");
        out_channels_[b] = t.c;
        total_c += t.c;
        outs.push_back(std::move(t));
    }
    Tensor y(x.n, total_c, out_l_);
    int c0 = 0;
    for (const auto& t : outs) {
        for (int i = 0; i < x.n; ++i)
            for (int c = 0; c < t.c; ++c)
                for (int k = 0; k < out_l_; ++k) y.at(i, c0 + c, k) = t.at(i, c, k);
        c0 += t.c;
    }
    return y;
}

Tensor ChannelBranches::backward(const Tensor& dy) {
    Tensor dx;
    int c0 = 0;
    for (size_t b = 0; b < branches_.size(); ++b) {
        Tensor dt(dy.n, out_channels_[b], out_l_);
        for (int i = 0; i < dy.n; ++i)
            for (int c = 0; c < dt.c; ++c)
                for (int k = 0; k < out_l_; ++k) dt.at(i, c, k) = dy.at(i, c0 + c, k);
        c0 += dt.c;
        for (auto it = branches_[b].rbegin(); it != branches_[b].rend(); ++it) dt = (*it)->backward(dt);
        check(dt.c == 1, "branch input must be single channel");
        if (dx.n == 0) dx = Tensor(dy.n, static_cast<int>(branches_.size()), dt.l);
        for (int i = 0; i < dy.n; ++i)
            for (int k = 0; k < dt.l; ++k) dx.at(i, static_cast<int>(b), k) = dt.at(i, 0, k);
    }
    return dx;
}

void ChannelBranches::collect_param_views(std::vector<std::span<double>>& params,
                                          std::vector<std::span<double>>& grads) {
    for (auto& branch : branches_)
        for (auto& layer : branch) {
            if (auto* nested = dynamic_cast<ChannelBranches*>(layer.get())) {
                nested->collect_param_views(params, grads);
            } else if (!layer->params().empty()) {
                params.push_back(layer->params());
                grads.push_back(layer->grads());
            }
        }
}

void ChannelBranches::save(json& j) const {
    j["kind"] = kind();
    json branches = json::array();
    for (const auto& branch : branches_) {
        json layers = json::array();
        for (const auto& layer : branch) {
            json lj;
            layer->save(lj);
            layers.push_back(std::move(lj));
        }
        branches.push_back(std::move(layers));
    }
    j["branches"] = std::move(branches);
}

// ---------------------------------------------------------------- Network

Tensor Network::forward(const Tensor& x, bool training, Rng* rng) {
    Tensor t = x;
    for (auto& layer : layers_) t = layer->forward(t, training, rng);
    return t;
}

void Network::backward(const Tensor& dy) {
    Tensor g = dy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
}

size_t Network::param_count() const {
    size_t n = 0;
    for (const auto& view : const_cast<Network*>(this)->param_views()) n += view.size();
    return n;
}

void Network::zero_grads() {
    for (auto& layer : layers_) {
        if (auto* branches = dynamic_cast<ChannelBranches*>(layer.get())) {
            std::vector<std::span<double>> p, g;
            branches->collect_param_views(p, g);
            for (auto& view : g) std::fill(view.begin(), view.end(), 0.0);
        } else {
            layer->zero_grads();
        }
    }
}

std::vector<std::span<double>> Network::param_views() {
    std::vector<std::span<double>> params, grads;
    for (auto& layer : layers_) {
        if (auto* branches = dynamic_cast<ChannelBranches*>(layer.get()))
            branches->collect_param_views(params, grads);
        else if (!layer->params().empty()) {
            params.push_back(layer->params());
            grads.push_back(layer->grads());
        }
    }
    return params;
}

std::vector<std::span<double>> Network::grad_views() {
    std::vector<std::span<double>> params, grads;
    for (auto& layer : layers_) {
        if (auto* branches = dynamic_cast<ChannelBranches*>(layer.get()))
            branches->collect_param_views(params, grads);
        else if (!layer->params().empty()) {
            params.push_back(layer->params());
            grads.push_back(layer->grads());
        }
    }
    return grads;
}

std::vector<double> Network::params_flat() const {
    std::vector<double> flat;
    for (const auto& view : const_cast<Network*>(this)->param_views())
        flat.insert(flat.end(), view.begin(), view.end());
    return flat;
}

void Network::set_params_flat(const std::vector<double>& flat) {
    size_t off = 0;
    for (auto& view : param_views()) {
        if (off + view.size() > flat.size()) throw Error(ErrorCode::ShapeMismatch, "flat parameter size");
        std::copy(flat.begin() + off, flat.begin() + off + view.size(), view.begin());
        off += view.size();
    }
    if (off != flat.size()) throw Error(ErrorCode::ShapeMismatch, "flat parameter size");
}

std::vector<double> Network::predict_batch(const Tensor& x) {
    Tensor out = forward(x, false, nullptr);
    check(out.c == 1 && out.l == 1, "network output must be scalar per sample");
    return out.v;
}

json Network::to_json() const {
    json layers = json::array();
    for (const auto& layer : layers_) {
        json lj;
        layer->save(lj);
        layers.push_back(std::move(lj));
    }
    json j;
    j["layers"] = std::move(layers);
    return j;
}

std::unique_ptr<Layer> layer_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "channel_combination") {
        auto layer = std::make_unique<ChannelCombination>(j.at("c_in").get<int>(), j.at("c_out").get<int>(),
                                                          j.at("relu").get<bool>());
        auto p = load_params(j, layer->params().size());
        std::copy(p.begin(), p.end(), layer->params().begin());
        return layer;
    }
    if (kind == "conv1d") {
        auto layer = std::make_unique<Conv1D>(j.at("c_in").get<int>(), j.at("filters").get<int>(),
                                              j.at("kernel").get<int>(), j.at("relu").get<bool>());
        auto p = load_params(j, layer->params().size());
        std::copy(p.begin(), p.end(), layer->params().begin());
        return layer;
    }
    if (kind == "maxpool1d") return std::make_unique<MaxPool1D>();
    if (kind == "flatten") return std::make_unique<Flatten>();
    if (kind == "dense") {
        auto layer = std::make_unique<Dense>(j.at("in").get<int>(), j.at("out").get<int>(),
                                             j.at("relu").get<bool>());
        auto p = load_params(j, layer->params().size());
        std::copy(p.begin(), p.end(), layer->params().begin());
        return layer;
    }
    if (kind == "dropout") return std::make_unique<Dropout>(j.at("p").get<double>());
    if (kind == "batch_norm1d") {
        auto layer = std::make_unique<BatchNorm1D>(j.at("channels").get<int>(), j.at("momentum").get<double>(),
                                                   j.at("eps").get<double>());
        auto p = load_params(j, layer->params().size());
        std::copy(p.begin(), p.end(), layer->params().begin());
        layer->running_mean() = j.at("running_mean").get<std::vector<double>>();
        layer->running_var() = j.at("running_var").get<std::vector<double>>();
        return layer;
    }
    if (kind == "channel_branches") {
        std::vector<std::vector<std::unique_ptr<Layer>>> branches;
        for (const auto& bj : j.at("branches")) {
            std::vector<std::unique_ptr<Layer>> branch;
            for (const auto& lj : bj) branch.push_back(layer_from_json(lj));
            branches.push_back(std::move(branch));
        }
        return std::make_unique<ChannelBranches>(std::move(branches));
    }
    throw Error(ErrorCode::IoError, "unknown layer kind '" + kind + "'");
}

Network Network::from_json(const json& j) {
    Network net;
    for (const auto& lj : j.at("layers")) net.add(layer_from_json(lj));
    return net;
}

void Network::save_checkpoint(const std::string& path, std::uint64_t seed) const {
    json j = to_json();
    j["format_version"] = 1;
    j["seed"] = seed;
    write_text_file(path, j.dump() + "\n");
}

Network Network::load_checkpoint(const std::string& path, std::uint64_t* seed_out) {
    json j = json::parse(read_text_file(path));
    if (j.at("format_version").get<int>() != 1)
        throw Error(ErrorCode::IoError, "unsupported checkpoint version");
    if (seed_out) *seed_out = j.at("seed").get<std::uint64_t>();
    return from_json(j);
}

// ---------------------------------------------------------------- loss / init / adam

double rmse_loss(std::span<const double> pred, std::span<const double> target) {
    if (pred.empty()) throw Error(ErrorCode::EmptyBatch, "rmse_loss on empty batch");
    if (pred.size() != target.size()) throw Error(ErrorCode::ShapeMismatch, "rmse_loss sizes differ");
    double sum = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        const double r = pred[i] - target[i];
        sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(pred.size()) + kRmseEpsilon);
}

std::vector<double> rmse_loss_grad(std::span<const double> pred, std::span<const double> target) {
    const double loss = rmse_loss(pred, target);
    const double n = static_cast<double>(pred.size());
    std::vector<double> grad(pred.size());
    for (size_t i = 0; i < pred.size(); ++i) grad[i] = (pred[i] - target[i]) / (n * loss);
    return grad;
}

namespace {

void init_layer(Layer& layer, Rng& rng) {
    if (auto* cc = dynamic_cast<ChannelCombination*>(&layer)) {
        const double sd = std::sqrt(2.0 / cc->c_in());
        auto p = cc->params();
        const size_t nw = static_cast<size_t>(cc->c_out()) * cc->c_in();
        for (size_t i = 0; i < nw; ++i) p[i] = rng.normal(0.0, sd);
        for (size_t i = nw; i < p.size(); ++i) p[i] = 0.0;
    } else if (auto* conv = dynamic_cast<Conv1D*>(&layer)) {
        const double sd = std::sqrt(2.0 / (static_cast<double>(conv->c_in()) * conv->kernel()));
        auto p = conv->params();
        const size_t nw = static_cast<size_t>(conv->filters()) * conv->c_in() * conv->kernel();
        for (size_t i = 0; i < nw; ++i) p[i] = rng.normal(0.0, sd);
        for (size_t i = nw; i < p.size(); ++i) p[i] = 0.0;
    } else if (auto* dense = dynamic_cast<Dense*>(&layer)) {
        const double sd = std::sqrt(2.0 / dense->in());
        auto p = dense->params();
        const size_t nw = static_cast<size_t>(dense->out()) * dense->in();
        for (size_t i = 0; i < nw; ++i) p[i] = rng.normal(0.0, sd);
        for (size_t i = nw; i < p.size(); ++i) p[i] = 0.0;
    }
    // batch norm keeps gamma=1, beta=0
}

}  // namespace

void init_params(Network& net, Rng& rng) {
    std::function<void(Layer&)> visit = [&](Layer& layer) {
        if (auto* branches = dynamic_cast<ChannelBranches*>(&layer)) {
            for (size_t b = 0; b < branches->branch_count(); ++b)
                for (const auto& sub : branches->branch(b)) visit(*sub);
        } else {
            init_layer(layer, rng);
        }
    };
    for (size_t i = 0; i < net.layer_count(); ++i) visit(net.layer(i));
}

void Adam::step(const std::vector<std::span<double>>& params, const std::vector<std::span<double>>& grads) {
    if (params.size() != grads.size()) throw Error(ErrorCode::ShapeMismatch, "adam views mismatch");
    size_t total = 0;
    for (size_t i = 0; i < params.size(); ++i) {
        if (params[i].size() != grads[i].size()) throw Error(ErrorCode::ShapeMismatch, "adam span mismatch");
        total += params[i].size();
    }
    if (m_.empty()) {
        m_.assign(total, 0.0);
        v_.assign(total, 0.0);
    } else if (m_.size() != total) {
        throw Error(ErrorCode::ShapeMismatch, "adam state size changed");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    size_t off = 0;
    for (size_t s = 0; s < params.size(); ++s) {
        auto p = params[s];
        auto g = grads[s];
        for (size_t i = 0; i < p.size(); ++i, ++off) {
            m_[off] = cfg_.beta1 * m_[off] + (1.0 - cfg_.beta1) * g[i];
            v_[off] = cfg_.beta2 * v_[off] + (1.0 - cfg_.beta2) * g[i] * g[i];
            const double mhat = m_[off] / bc1;
            const double vhat = v_[off] / bc2;
            p[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

}  // namespace spo2::nn
