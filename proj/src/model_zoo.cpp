#include "spo2/model_zoo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

namespace spo2 {

using json = nlohmann::json;
using nn::Network;

const char* model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::Model1: return "model1";
        case ModelKind::Model2: return "model2";
        case ModelKind::Model3: return "model3";
        case ModelKind::Model1LinearCC: return "model1_linear_cc";
        case ModelKind::Model1DenseFE: return "model1_dense_fe";
        case ModelKind::DingBaseline: return "ding_baseline";
    }
    return "unknown";
}

ModelKind model_kind_from_name(const std::string& name) {
    for (ModelKind kind : {ModelKind::Model1, ModelKind::Model2, ModelKind::Model3, ModelKind::Model1LinearCC,
                           ModelKind::Model1DenseFE, ModelKind::DingBaseline})
        if (name == model_kind_name(kind)) return kind;
    throw Error(ErrorCode::ConfigError, "unknown model kind '" + name + "'");
}

NetworkSpec default_spec(ModelKind kind) {
    NetworkSpec spec;
    spec.kind = kind;
    switch (kind) {
        case ModelKind::Model1:
            spec.cc_channels = {32, 16, 7};
            spec.conv_filters = {24, 48, 64};
            spec.conv_kernels = {11, 9, 7};
            break;
        case ModelKind::Model2:
            spec.cc_channels = {24, 12, 7};
            spec.conv_filters = {12, 24};  // per color channel, unshared
            spec.conv_kernels = {11, 9};
            break;
        case ModelKind::Model3:
            spec.conv_filters = {160, 128, 96, 48};
            spec.conv_kernels = {11, 9, 7, 5};
            break;
        case ModelKind::Model1LinearCC:
            spec.conv_filters = {24, 48, 64};
            spec.conv_kernels = {11, 9, 7};
            break;
        case ModelKind::Model1DenseFE:
            spec.cc_channels = {32, 16, 7};
            spec.dense_nodes = {16};
            break;
        case ModelKind::DingBaseline:
            spec.conv_filters = {32, 16};
            spec.conv_kernels = {11, 9};
            break;
    }
    return spec;
}

size_t expected_param_budget(ModelKind kind) {
    switch (kind) {
        case ModelKind::Model1: return 34000;
        case ModelKind::Model2: return 12000;
        case ModelKind::Model3: return 307000;
        default: return 0;
    }
}

namespace {

void validate_conv_stack(const NetworkSpec& spec, size_t expected_blocks) {
    if (spec.conv_filters.size() != spec.conv_kernels.size())
        throw Error(ErrorCode::SpecInvalid, "conv_filters and conv_kernels must match in length");
    if (expected_blocks > 0 && spec.conv_filters.empty())
        throw Error(ErrorCode::SpecInvalid, "conv stack must not be empty");
}

int conv_pool_out_length(int length, const std::vector<int>& kernels) {
    for (int k : kernels) {
        length = length - k + 1;
        if (length < 2) throw Error(ErrorCode::SpecInvalid, "feature stack shrinks input below 2 samples");
        length /= 2;
    }
    return length;
}

void append_conv_block(Network& net, int c_in, int filters, int kernel, const NetworkSpec& spec) {
    net.add(std::make_unique<nn::Conv1D>(c_in, filters, kernel, true));
    if (spec.batch_norm) net.add(std::make_unique<nn::BatchNorm1D>(filters));
    net.add(std::make_unique<nn::MaxPool1D>());
    if (spec.dropout_p > 0) net.add(std::make_unique<nn::Dropout>(spec.dropout_p));
}

Network build_model1(const NetworkSpec& spec) {
    Network net;
    int c = 3;
    for (int width : spec.cc_channels) {
        net.add(std::make_unique<nn::ChannelCombination>(c, width, true));
        c = width;
    }
    for (size_t i = 0; i < spec.conv_filters.size(); ++i) {
        append_conv_block(net, c, spec.conv_filters[i], spec.conv_kernels[i], spec);
        c = spec.conv_filters[i];
    }
    const int out_l = conv_pool_out_length(spec.input_length, spec.conv_kernels);
    net.add(std::make_unique<nn::Flatten>());
    net.add(std::make_unique<nn::Dense>(c * out_l, 1, false));
    return net;
}

Network build_model2(const NetworkSpec& spec) {
    Network net;
    std::vector<std::vector<std::unique_ptr<nn::Layer>>> branches;
    for (int b = 0; b < 3; ++b) {
        std::vector<std::unique_ptr<nn::Layer>> branch;
        int c = 1;
        for (size_t i = 0; i < spec.conv_filters.size(); ++i) {
            branch.push_back(std::make_unique<nn::Conv1D>(c, spec.conv_filters[i], spec.conv_kernels[i], true));
            if (spec.batch_norm) branch.push_back(std::make_unique<nn::BatchNorm1D>(spec.conv_filters[i]));
            branch.push_back(std::make_unique<nn::MaxPool1D>());
            if (spec.dropout_p > 0) branch.push_back(std::make_unique<nn::Dropout>(spec.dropout_p));
            c = spec.conv_filters[i];
        }
        branches.push_back(std::move(branch));
    }
    net.add(std::make_unique<nn::ChannelBranches>(std::move(branches)));

    int c = 3 * spec.conv_filters.back();
    for (int width : spec.cc_channels) {
        net.add(std::make_unique<nn::ChannelCombination>(c, width, true));
        c = width;
    }
    const int out_l = conv_pool_out_length(spec.input_length, spec.conv_kernels);
    net.add(std::make_unique<nn::Flatten>());
    net.add(std::make_unique<nn::Dense>(c * out_l, 1, false));
    return net;
}

Network build_model3(const NetworkSpec& spec) {
    Network net;
    int c = 3;
    for (size_t i = 0; i < spec.conv_filters.size(); ++i) {
        if (i > 0 && spec.conv_filters[i] >= spec.conv_filters[i - 1])
            throw Error(ErrorCode::SpecInvalid, "model3 filter counts must decrease");
        append_conv_block(net, c, spec.conv_filters[i], spec.conv_kernels[i], spec);
        c = spec.conv_filters[i];
    }
    const int out_l = conv_pool_out_length(spec.input_length, spec.conv_kernels);
    net.add(std::make_unique<nn::Flatten>());
    net.add(std::make_unique<nn::Dense>(c * out_l, 1, false));
    return net;
}

Network build_model1_linear_cc(const NetworkSpec& spec) {
    Network net;
    net.add(std::make_unique<nn::ChannelCombination>(3, 1, false));  // single linear combination
    int c = 1;
    for (size_t i = 0; i < spec.conv_filters.size(); ++i) {
        append_conv_block(net, c, spec.conv_filters[i], spec.conv_kernels[i], spec);
        c = spec.conv_filters[i];
    }
    const int out_l = conv_pool_out_length(spec.input_length, spec.conv_kernels);
    net.add(std::make_unique<nn::Flatten>());
    net.add(std::make_unique<nn::Dense>(c * out_l, 1, false));
    return net;
}

Network build_model1_dense_fe(const NetworkSpec& spec) {
    Network net;
    int c = 3;
    for (int width : spec.cc_channels) {
        net.add(std::make_unique<nn::ChannelCombination>(c, width, true));
        c = width;
    }
    net.add(std::make_unique<nn::Flatten>());
    int in = c * spec.input_length;
    for (int nodes : spec.dense_nodes) {
        net.add(std::make_unique<nn::Dense>(in, nodes, true));
        if (spec.dropout_p > 0) net.add(std::make_unique<nn::Dropout>(spec.dropout_p));
        in = nodes;
    }
    net.add(std::make_unique<nn::Dense>(in, 1, false));
    return net;
}

Network build_ding_baseline(const NetworkSpec& spec) {
    Network net;
    int c = 3;
    for (size_t i = 0; i < spec.conv_filters.size(); ++i) {
        append_conv_block(net, c, spec.conv_filters[i], spec.conv_kernels[i], spec);
        c = spec.conv_filters[i];
    }
    const int out_l = conv_pool_out_length(spec.input_length, spec.conv_kernels);
    net.add(std::make_unique<nn::Flatten>());
    net.add(std::make_unique<nn::Dense>(c * out_l, 1, false));
    return net;
}

}  // namespace

nn::Network build_model(const NetworkSpec& spec) {
    if (spec.input_length < 4) throw Error(ErrorCode::SpecInvalid, "input_length too small");
    Network net;
    switch (spec.kind) {
        case ModelKind::Model1:
            validate_conv_stack(spec, 3);
            net = build_model1(spec);
            break;
        case ModelKind::Model2:
            validate_conv_stack(spec, 2);
            net = build_model2(spec);
            break;
        case ModelKind::Model3:
            validate_conv_stack(spec, 4);
            net = build_model3(spec);
            break;
        case ModelKind::Model1LinearCC:
            validate_conv_stack(spec, 3);
            net = build_model1_linear_cc(spec);
            break;
        case ModelKind::Model1DenseFE:
            if (spec.dense_nodes.empty())
                throw Error(ErrorCode::SpecInvalid, "dense-feature ablation needs dense_nodes");
            net = build_model1_dense_fe(spec);
            break;
        case ModelKind::DingBaseline:
            validate_conv_stack(spec, 2);
            net = build_ding_baseline(spec);
            break;
    }

    const size_t budget = spec.enforce_budget ? expected_param_budget(spec.kind) : 0;
    if (budget > 0) {
        const double count = static_cast<double>(net.param_count());
        if (count < 0.8 * budget || count > 1.2 * budget)
            throw Error(ErrorCode::SpecInvalid,
                        std::string(model_kind_name(spec.kind)) + " has " + std::to_string(net.param_count()) +
                            " parameters, outside 20% of " + std::to_string(budget));
    }

    Rng rng(spec.seed);
    nn::init_params(net, rng);
    return net;
}

NetworkSpec spec_from_json_file(const std::string& path) {
    json j = json::parse(read_text_file(path));
    NetworkSpec spec = default_spec(model_kind_from_name(j.at("kind").get<std::string>()));
    if (j.contains("input_length")) spec.input_length = j["input_length"].get<int>();
    if (j.contains("cc_channels")) spec.cc_channels = j["cc_channels"].get<std::vector<int>>();
    if (j.contains("conv_filters")) spec.conv_filters = j["conv_filters"].get<std::vector<int>>();
    if (j.contains("conv_kernels")) spec.conv_kernels = j["conv_kernels"].get<std::vector<int>>();
    if (j.contains("dense_nodes")) spec.dense_nodes = j["dense_nodes"].get<std::vector<int>>();
    if (j.contains("dropout_p")) spec.dropout_p = j["dropout_p"].get<double>();
    if (j.contains("batch_norm")) spec.batch_norm = j["batch_norm"].get<bool>();
    if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
    return spec;
}

void spec_to_json_file(const std::string& path, const NetworkSpec& spec) {
    json j;
    j["kind"] = model_kind_name(spec.kind);
    j["input_length"] = spec.input_length;
    j["cc_channels"] = spec.cc_channels;
    j["conv_filters"] = spec.conv_filters;
    j["conv_kernels"] = spec.conv_kernels;
    j["dense_nodes"] = spec.dense_nodes;
    j["dropout_p"] = spec.dropout_p;
    j["batch_norm"] = spec.batch_norm;
    j["seed"] = spec.seed;
    write_text_file(path, j.dump(2) + "\n");
}

namespace {

nn::Tensor batch_tensor(const SegmentDataset& ds, const std::vector<size_t>& indices, size_t begin,
                        size_t end, std::vector<double>& labels) {
    const int length = ds.segments.front().length;
    nn::Tensor x(static_cast<int>(end - begin), 3, length);
    labels.resize(end - begin);
    for (size_t b = begin; b < end; ++b) {
        const Segment& seg = ds.segments[indices[b]];
        if (seg.length != length) throw Error(ErrorCode::ShapeMismatch, "segments have mixed lengths");
        std::copy(seg.data.begin(), seg.data.end(), x.v.begin() + (b - begin) * seg.data.size());
        labels[b - begin] = seg.label;
    }
    return x;
}

}  // namespace

double evaluate_rmse(nn::Network& network, const SegmentDataset& ds, int batch_size) {
    if (ds.empty()) throw Error(ErrorCode::EmptyDataset, "evaluate on empty dataset");
    std::vector<size_t> indices(ds.size());
    std::iota(indices.begin(), indices.end(), 0);
    double sum_sq = 0.0;
    std::vector<double> labels;
    for (size_t begin = 0; begin < indices.size(); begin += batch_size) {
        const size_t end = std::min(indices.size(), begin + batch_size);
        nn::Tensor x = batch_tensor(ds, indices, begin, end, labels);
        const std::vector<double> pred = network.predict_batch(x);
        for (size_t i = 0; i < pred.size(); ++i) {
            const double r = pred[i] - labels[i];
            sum_sq += r * r;
        }
    }
    return std::sqrt(sum_sq / static_cast<double>(ds.size()));
}

TrainResult train(nn::Network network, const SegmentDataset& train_in, const SegmentDataset& val_in,
                  const TrainingConfig& cfg) {
    if (train_in.empty() || val_in.empty())
        throw Error(ErrorCode::EmptyDataset, "training needs nonempty train and validation sets");
    if (cfg.epochs < 1 || cfg.batch_size < 1 || cfg.learning_rate <= 0)
        throw Error(ErrorCode::ConfigError, "training config values must be positive");

    Rng rng(cfg.seed);
    const SegmentDataset train_ds = cfg.oversample_train_to > 0
                                        ? bootstrap_oversample(train_in, cfg.oversample_train_to, rng.next_u64())
                                        : train_in;
    const SegmentDataset val_ds = cfg.oversample_val_to > 0
                                      ? bootstrap_oversample(val_in, cfg.oversample_val_to, rng.next_u64())
                                      : val_in;

    nn::Adam adam({cfg.learning_rate});
    auto param_views = network.param_views();
    auto grad_views = network.grad_views();

    TrainResult result;
    result.best_val_rmse = std::numeric_limits<double>::infinity();
    std::vector<double> best_params = network.params_flat();

    std::vector<size_t> order(train_ds.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> labels;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        // Fisher-Yates with our deterministic rng
        for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_u64(i)]);

        double epoch_sq = 0.0;
        size_t epoch_n = 0;
        for (size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            const size_t end = std::min(order.size(), begin + static_cast<size_t>(cfg.batch_size));
            nn::Tensor x = batch_tensor(train_ds, order, begin, end, labels);
            nn::Tensor out = network.forward(x, true, &rng);
            const std::span<const double> pred(out.v.data(), out.v.size());
            const double loss = nn::rmse_loss(pred, labels);
            if (!std::isfinite(loss)) throw Error(ErrorCode::DivergenceDetected, "non-finite training loss");
            for (size_t i = 0; i < pred.size(); ++i) {
                const double r = pred[i] - labels[i];
                epoch_sq += r * r;
            }
            epoch_n += pred.size();
            const std::vector<double> grad = nn::rmse_loss_grad(pred, labels);
            nn::Tensor dy(out.n, 1, 1);
            dy.v = grad;
            network.zero_grads();
            network.backward(dy);
            adam.step(param_views, grad_views);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_rmse = std::sqrt(epoch_sq / static_cast<double>(epoch_n));
        stats.val_rmse = evaluate_rmse(network, val_ds);
        if (!std::isfinite(stats.val_rmse))
            throw Error(ErrorCode::DivergenceDetected, "non-finite validation loss");
        result.history.push_back(stats);

        if (stats.val_rmse < result.best_val_rmse) {
            result.best_val_rmse = stats.val_rmse;
            result.best_epoch = epoch;
            best_params = network.params_flat();
        }
    }

    network.set_params_flat(best_params);
    result.network = std::move(network);
    return result;
}

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history) {
    std::string out = "epoch,train_rmse,val_rmse\n";
    for (const auto& row : history)
        out += std::to_string(row.epoch) + ',' + format_double(row.train_rmse) + ',' +
               format_double(row.val_rmse) + '\n';
    write_text_file(path, out);
}

PredictionSeries predict_recording(nn::Network& network, const SkinColorSignal& signal,
                                   const WindowOptions& opts) {
    if (signal.frame_rate <= 0) throw Error(ErrorCode::ConfigError, "signal frame_rate must be positive");
    const int frames = static_cast<int>(std::lround(opts.window_seconds * signal.frame_rate));
    const int stride = std::max(1, static_cast<int>(std::lround(opts.stride_seconds * signal.frame_rate)));
    const int n = static_cast<int>(signal.size());
    if (n < frames)
        throw Error(ErrorCode::SignalTooShort,
                    std::to_string(n) + " frames, need " + std::to_string(frames));

    PredictionSeries series;
    series.postprocessed = false;
    const int batch = 256;
    std::vector<int> starts;
    for (int start = 0; start + frames <= n; start += stride) starts.push_back(start);

    for (size_t begin = 0; begin < starts.size(); begin += batch) {
        const size_t end = std::min(starts.size(), begin + static_cast<size_t>(batch));
        nn::Tensor x(static_cast<int>(end - begin), 3, frames);
        for (size_t b = begin; b < end; ++b) {
            std::vector<double> window(3 * static_cast<size_t>(frames));
            for (int c = 0; c < 3; ++c)
                for (int i = 0; i < frames; ++i)
                    window[static_cast<size_t>(c) * frames + i] = signal.samples[starts[b] + i][c];
            standardize(window, 3, frames);
            std::copy(window.begin(), window.end(), x.v.begin() + (b - begin) * window.size());
        }
        const std::vector<double> pred = network.predict_batch(x);
        for (size_t b = begin; b < end; ++b) {
            series.times.push_back(static_cast<double>(starts[b] + frames) / signal.frame_rate);
            series.values.push_back(pred[b - begin]);
        }
    }
    return series;
}

std::array<double, 3> linear_cc_weights(const nn::Network& network) {
    const auto* cc = dynamic_cast<const nn::ChannelCombination*>(&network.layer(0));
    if (!cc || cc->c_in() != 3 || cc->c_out() != 1 || cc->relu())
        throw Error(ErrorCode::SpecInvalid, "network does not start with a 3->1 linear combination");
    const auto row = cc->weight_row(0);
    return {row[0], row[1], row[2]};
}

}  // namespace spo2
