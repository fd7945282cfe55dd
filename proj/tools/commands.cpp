#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <thread>

#include <nlohmann/json.hpp>

#include "spo2/common.hpp"
#include "spo2/dataset.hpp"
#include "spo2/eval_stats.hpp"
#include "spo2/hyperband.hpp"
#include "spo2/model_zoo.hpp"
#include "spo2/ratio_baseline.hpp"
#include "spo2/signal.hpp"
#include "spo2/signal_extraction.hpp"
#include "spo2/synth.hpp"
#include "svg.hpp"

namespace spo2::tools {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

// every artifact carries the hash of the effective configuration
void embed_config_hash(const std::string& path, const std::string& hash) {
    if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
        json j = json::parse(read_text_file(path));
        j["config_hash"] = hash;
        write_text_file(path, j.dump(2) + "\n");
    } else if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".svg") == 0) {
        write_text_file(path, "<!-- config_hash=" + hash + " -->\n" + read_text_file(path));
    } else {
        write_text_file(path, "# config_hash=" + hash + "\n" + read_text_file(path));
    }
}

struct Manifest {
    std::string command;
    json config;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;

    std::string config_hash() const { return fnv1a_hex(config.dump()); }

    void write(const std::string& out_path) const {
        json j;
        j["command"] = command;
        j["version"] = kVersion;
        j["config"] = config;
        j["config_hash"] = config_hash();
        json in = json::object();
        for (const auto& path : inputs) in[path] = fnv1a_hex(read_text_file(path));
        j["inputs"] = in;
        j["outputs"] = outputs;
        write_text_file(out_path, j.dump(2) + "\n");
    }

    void stamp_outputs(const std::string& dir) const {
        for (const auto& name : outputs) embed_config_hash(dir.empty() ? name : dir + "/" + name, config_hash());
    }
};

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create directory " + dir);
}

ReferenceSeries load_reference_5hz(const std::string& path, double lambda) {
    const ReferenceSeries raw = read_reference_csv(path);
    return interpolate_reference(raw, 5.0, lambda);
}

}  // namespace

// ---------------------------------------------------------------- extract

void cmd_extract(const ExtractArgs& args) {
    double fps = args.fps;
    std::string source_id = args.source_id;
    std::vector<std::string> inputs;
    const std::string meta_path = args.frames_dir + "/metadata.json";
    if (fs::exists(meta_path)) {
        const json meta = json::parse(read_text_file(meta_path));
        if (meta.contains("frame_rate")) fps = meta["frame_rate"].get<double>();
        if (source_id.empty() && meta.contains("source_id")) source_id = meta["source_id"].get<std::string>();
        inputs.push_back(meta_path);
    }
    if (source_id.empty()) source_id = args.frames_dir;

    if (list_frame_files(args.frames_dir).empty())
        throw Error(ErrorCode::ConfigError, "no frame files in " + args.frames_dir);

    SegmentationOptions opts;
    opts.skin_is_high_chroma = !args.low_chroma_skin;
    SkinColorSignal signal = extract_skin_signal_from_dir(args.frames_dir, fps, source_id, opts);
    write_signal_csv(args.out_csv, signal);

    Manifest manifest;
    manifest.command = "extract";
    manifest.config = {{"frames_dir", args.frames_dir},
                       {"fps", fps},
                       {"source_id", source_id},
                       {"low_chroma_skin", args.low_chroma_skin}};
    manifest.inputs = inputs;
    manifest.outputs = {args.out_csv};
    manifest.stamp_outputs("");
    manifest.write(args.out_csv + ".manifest.json");
}

// ---------------------------------------------------------------- simulate

namespace {

ProtocolSpec protocol_from_json(const json& j) {
    ProtocolSpec spec;
    if (j.contains("cycles")) spec.cycles = j["cycles"].get<int>();
    if (j.contains("normal_lo_s")) spec.normal_lo_s = j["normal_lo_s"].get<double>();
    if (j.contains("normal_hi_s")) spec.normal_hi_s = j["normal_hi_s"].get<double>();
    if (j.contains("hold_lo_s")) spec.hold_lo_s = j["hold_lo_s"].get<double>();
    if (j.contains("hold_hi_s")) spec.hold_hi_s = j["hold_hi_s"].get<double>();
    if (j.contains("baseline")) spec.baseline = j["baseline"].get<double>();
    if (j.contains("dip_lo")) spec.dip_lo = j["dip_lo"].get<double>();
    if (j.contains("dip_hi")) spec.dip_hi = j["dip_hi"].get<double>();
    if (j.contains("recover_s")) spec.recover_s = j["recover_s"].get<double>();
    if (j.contains("tail_s")) spec.tail_s = j["tail_s"].get<double>();
    return spec;
}

OpticalModel optical_from_json(const json& j) {
    OpticalModel model;
    if (j.contains("dc")) model.dc = j["dc"].get<std::array<double, 3>>();
    if (j.contains("ac_base")) model.ac_base = j["ac_base"].get<std::array<double, 3>>();
    if (j.contains("sens")) model.sens = j["sens"].get<std::array<double, 3>>();
    if (j.contains("heart_rate_hz")) model.heart_rate_hz = j["heart_rate_hz"].get<double>();
    if (j.contains("harmonic_amp")) model.harmonic_amp = j["harmonic_amp"].get<double>();
    if (j.contains("wander_amp")) model.wander_amp = j["wander_amp"].get<double>();
    if (j.contains("wander_freq_hz")) model.wander_freq_hz = j["wander_freq_hz"].get<double>();
    if (j.contains("noise_sd")) model.noise_sd = j["noise_sd"].get<double>();
    return model;
}

json protocol_to_json(const ProtocolSpec& s) {
    return {{"cycles", s.cycles},       {"normal_lo_s", s.normal_lo_s}, {"normal_hi_s", s.normal_hi_s},
            {"hold_lo_s", s.hold_lo_s}, {"hold_hi_s", s.hold_hi_s},     {"baseline", s.baseline},
            {"dip_lo", s.dip_lo},       {"dip_hi", s.dip_hi},           {"recover_s", s.recover_s},
            {"tail_s", s.tail_s}};
}

json optical_to_json(const OpticalModel& m) {
    return {{"dc", m.dc},          {"ac_base", m.ac_base},
            {"sens", m.sens},      {"heart_rate_hz", m.heart_rate_hz},
            {"harmonic_amp", m.harmonic_amp}, {"wander_amp", m.wander_amp},
            {"wander_freq_hz", m.wander_freq_hz}, {"noise_sd", m.noise_sd}};
}

}  // namespace

void cmd_simulate(const SimulateArgs& args) {
    json config = json::object();
    std::vector<std::string> inputs;
    if (!args.config_path.empty()) {
        config = json::parse(read_text_file(args.config_path));
        inputs.push_back(args.config_path);
    }
    ProtocolSpec protocol_spec = protocol_from_json(config.value("protocol", json::object()));
    OpticalModel optical = optical_from_json(config.value("optical", json::object()));
    std::uint64_t seed = config.value("seed", std::uint64_t{1});
    if (args.seed_given) seed = args.seed;
    const int recordings = config.value("recordings", args.recordings);
    const std::string participant = config.value("participant_id", args.participant_id);
    const std::string hand_mode = config.value("hand_mode", std::string("PD"));
    const int skin_type = config.value("skin_type", 3);

    ensure_dir(args.out_dir);
    Manifest manifest;
    manifest.command = "simulate";
    manifest.config = {{"protocol", protocol_to_json(protocol_spec)},
                       {"optical", optical_to_json(optical)},
                       {"seed", seed},
                       {"recordings", recordings},
                       {"participant_id", participant},
                       {"hand_mode", hand_mode},
                       {"skin_type", skin_type},
                       {"render", args.render}};
    manifest.inputs = inputs;

    json participant_json;
    participant_json["participant_id"] = participant;
    participant_json["recordings"] = json::array();

    for (int r = 0; r < recordings; ++r) {
        const std::string rec_name = "rec" + std::to_string(r + 1);
        const std::string rec_dir = args.out_dir + "/" + rec_name;
        ensure_dir(rec_dir);

        ProtocolSpec ps = protocol_spec;
        ps.seed = seed + static_cast<std::uint64_t>(r) * 1000003ULL;
        const ProtocolResult protocol = generate_protocol(ps);
        const SkinColorSignal signal =
            synthesize_signal(protocol.ref, optical, 30.0, ps.seed ^ 0x5bd1e995ULL);

        write_reference_csv(rec_dir + "/ref.csv", protocol.ref);
        write_signal_csv(rec_dir + "/signal.csv", signal);

        RecordingAnnotation ann;
        ann.participant_id = participant;
        ann.hand_mode = hand_mode_from_name(hand_mode);
        ann.skin_type = skin_type;
        ann.cycle_boundaries = protocol.boundaries;
        write_annotation_json(rec_dir + "/annotation.json", ann);

        if (args.render) {
            const std::string frames_dir = rec_dir + "/frames";
            ensure_dir(frames_dir);
            const auto frames = render_frames(signal);
            char name[32];
            for (size_t i = 0; i < frames.size(); ++i) {
                std::snprintf(name, sizeof name, "/frame_%06zu.ppm", i);
                write_ppm(frames_dir + name, frames[i]);
            }
            json meta = {{"frame_rate", 30.0}, {"source_id", participant + "/" + rec_name}};
            write_text_file(frames_dir + "/metadata.json", meta.dump(2) + "\n");
        }

        manifest.outputs.push_back(rec_name + "/ref.csv");
        manifest.outputs.push_back(rec_name + "/signal.csv");
        manifest.outputs.push_back(rec_name + "/annotation.json");
        participant_json["recordings"].push_back(rec_name);
    }

    write_text_file(args.out_dir + "/participant.json", participant_json.dump(2) + "\n");
    write_text_file(args.out_dir + "/generator_config.json",
                    json({{"protocol", protocol_to_json(protocol_spec)},
                          {"optical", optical_to_json(optical)},
                          {"seed", seed}})
                            .dump(2) +
                        "\n");
    manifest.outputs.push_back("participant.json");
    manifest.outputs.push_back("generator_config.json");
    manifest.stamp_outputs(args.out_dir);
    manifest.write(args.out_dir + "/manifest.json");
}

// ---------------------------------------------------------------- dataset

void cmd_dataset(const DatasetArgs& args) {
    const SkinColorSignal signal = read_signal_csv(args.signal_csv);
    const ReferenceSeries ref5 = load_reference_5hz(args.ref_csv, args.spline_lambda);
    const RecordingAnnotation ann = read_annotation_json(args.annotation_json);

    SegmentMeta meta;
    meta.participant_id = ann.participant_id;
    meta.hand_mode = ann.hand_mode;
    meta.skin_type = ann.skin_type;
    const SegmentDataset ds = window_segments(signal, ref5, meta);
    const CycleSplit split = split_by_cycle(ds, ann.cycle_boundaries);

    double label_lo = 1e300, label_hi = -1e300;
    for (const auto& seg : ds.segments) {
        label_lo = std::min(label_lo, seg.label);
        label_hi = std::max(label_hi, seg.label);
    }

    json j;
    j["participant_id"] = ann.participant_id;
    j["segments_total"] = ds.size();
    j["segments_train"] = split.train.size();
    j["segments_val"] = split.val.size();
    j["segments_dropped"] = split.dropped;
    j["label_min"] = label_lo;
    j["label_max"] = label_hi;
    j["window_seconds"] = ds.window_seconds;
    write_text_file(args.out_summary, j.dump(2) + "\n");

    Manifest manifest;
    manifest.command = "dataset";
    manifest.config = {{"signal", args.signal_csv},
                       {"ref", args.ref_csv},
                       {"annotation", args.annotation_json},
                       {"spline_lambda", args.spline_lambda}};
    manifest.inputs = {args.signal_csv, args.ref_csv, args.annotation_json};
    manifest.outputs = {args.out_summary};
    manifest.stamp_outputs("");
    manifest.write(args.out_summary + ".manifest.json");
}

// ---------------------------------------------------------------- train

namespace {

struct RecordingRef {
    std::string name;
    std::string signal_path;
    std::string ref_path;
    std::string annotation_path;
};

RecordingRef recording_from_json(const json& j, const std::string& default_name) {
    RecordingRef rec;
    rec.name = j.value("name", default_name);
    rec.signal_path = j.at("signal").get<std::string>();
    rec.ref_path = j.at("ref").get<std::string>();
    rec.annotation_path = j.at("annotation").get<std::string>();
    return rec;
}

NetworkSpec spec_from_config(const json& model_json) {
    NetworkSpec spec;
    if (model_json.contains("spec_file")) {
        spec = spec_from_json_file(model_json["spec_file"].get<std::string>());
    } else {
        spec = default_spec(model_kind_from_name(model_json.at("kind").get<std::string>()));
        if (model_json.contains("cc_channels")) spec.cc_channels = model_json["cc_channels"].get<std::vector<int>>();
        if (model_json.contains("conv_filters"))
            spec.conv_filters = model_json["conv_filters"].get<std::vector<int>>();
        if (model_json.contains("conv_kernels"))
            spec.conv_kernels = model_json["conv_kernels"].get<std::vector<int>>();
        if (model_json.contains("dense_nodes")) spec.dense_nodes = model_json["dense_nodes"].get<std::vector<int>>();
        if (model_json.contains("dropout_p")) spec.dropout_p = model_json["dropout_p"].get<double>();
        if (model_json.contains("batch_norm")) spec.batch_norm = model_json["batch_norm"].get<bool>();
        if (model_json.contains("enforce_budget")) spec.enforce_budget = model_json["enforce_budget"].get<bool>();
    }
    return spec;
}

TrainingConfig training_from_config(const json& j) {
    TrainingConfig cfg;
    if (j.contains("learning_rate")) cfg.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("epochs")) cfg.epochs = j["epochs"].get<int>();
    if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<int>();
    if (j.contains("oversample_train_to")) cfg.oversample_train_to = j["oversample_train_to"].get<size_t>();
    if (j.contains("oversample_val_to")) cfg.oversample_val_to = j["oversample_val_to"].get<size_t>();
    return cfg;
}

struct LoadedRecording {
    RecordingRef ref;
    SkinColorSignal signal;
    ReferenceSeries ref5;
    RecordingAnnotation annotation;
};

LoadedRecording load_recording(const RecordingRef& rec, double lambda) {
    LoadedRecording out;
    out.ref = rec;
    out.signal = read_signal_csv(rec.signal_path);
    out.ref5 = load_reference_5hz(rec.ref_path, lambda);
    out.annotation = read_annotation_json(rec.annotation_path);
    return out;
}

CycleSplit split_recording(const LoadedRecording& rec) {
    SegmentMeta meta;
    meta.participant_id = rec.annotation.participant_id;
    meta.hand_mode = rec.annotation.hand_mode;
    meta.skin_type = rec.annotation.skin_type;
    const SegmentDataset ds = window_segments(rec.signal, rec.ref5, meta);
    return split_by_cycle(ds, rec.annotation.cycle_boundaries);
}

void append_segments(SegmentDataset& into, const SegmentDataset& from) {
    into.segments.insert(into.segments.end(), from.segments.begin(), from.segments.end());
    into.provenance.insert(into.provenance.end(), from.provenance.begin(), from.provenance.end());
    into.window_seconds = from.window_seconds;
}

// run fn(i) for i in [0,n) on up to jobs threads; outputs indexed by i stay
// deterministic regardless of scheduling
void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(static_cast<size_t>(jobs));
    for (int t = 0; t < jobs; ++t) {
        threads.emplace_back([&, t]() {
            try {
                for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
            } catch (...) {
                errors[static_cast<size_t>(t)] = std::current_exception();
            }
        });
    }
    for (auto& th : threads) th.join();
    for (auto& err : errors)
        if (err) std::rethrow_exception(err);
}

}  // namespace

void cmd_train(const TrainArgs& args) {
    const json config = json::parse(read_text_file(args.config_path));
    std::vector<std::string> inputs = {args.config_path};
    ensure_dir(args.out_dir);

    const std::string mode = config.value("mode", std::string("participant_specific"));
    const double lambda = config.value("spline_lambda", 0.0);
    NetworkSpec base_spec = spec_from_config(config.at("model"));
    TrainingConfig base_training = training_from_config(config.value("training", json::object()));
    const int instances = config.value("instances", 1);
    std::uint64_t seed = config.value("seed", std::uint64_t{1});
    if (args.seed_given) seed = args.seed;

    SegmentDataset train_ds, val_ds;
    train_ds.split_tag = "train";
    val_ds.split_tag = "val";
    std::vector<LoadedRecording> test_recordings;

    if (mode == "participant_specific") {
        const LoadedRecording rec = load_recording(
            recording_from_json(config.at("train_recording"), "train"), lambda);
        inputs.push_back(rec.ref.signal_path);
        inputs.push_back(rec.ref.ref_path);
        inputs.push_back(rec.ref.annotation_path);
        CycleSplit split = split_recording(rec);
        train_ds = std::move(split.train);
        val_ds = std::move(split.val);
        if (config.contains("test_recordings")) {
            int index = 1;
            for (const auto& tj : config["test_recordings"]) {
                const LoadedRecording test =
                    load_recording(recording_from_json(tj, "test" + std::to_string(index++)), lambda);
                inputs.push_back(test.ref.signal_path);
                inputs.push_back(test.ref.ref_path);
                inputs.push_back(test.ref.annotation_path);
                test_recordings.push_back(test);
            }
        }
    } else if (mode == "leave_one_out") {
        const std::string test_id = config.at("test_participant").get<std::string>();
        std::vector<std::string> ids;
        bool found = false;
        for (const auto& pj : config.at("participants")) {
            const std::string id = pj.at("id").get<std::string>();
            ids.push_back(id);
            int index = 1;
            for (const auto& rj : pj.at("recordings")) {
                const LoadedRecording rec = load_recording(
                    recording_from_json(rj, id + "_rec" + std::to_string(index++)), lambda);
                inputs.push_back(rec.ref.signal_path);
                inputs.push_back(rec.ref.ref_path);
                inputs.push_back(rec.ref.annotation_path);
                if (id == test_id) {
                    test_recordings.push_back(rec);
                    found = true;
                } else {
                    CycleSplit split = split_recording(rec);
                    append_segments(train_ds, split.train);
                    append_segments(val_ds, split.val);
                }
            }
        }
        leave_one_out_splits(ids);  // validates participant count
        if (!found) throw Error(ErrorCode::ConfigError, "test_participant not in participants");
    } else {
        throw Error(ErrorCode::ConfigError, "mode must be participant_specific or leave_one_out");
    }

    if (train_ds.empty() || val_ds.empty())
        throw Error(ErrorCode::EmptyDataset, "empty train or validation split");

    // one training instance per seed; the best-validation instance is kept
    struct InstanceResult {
        TrainResult result;
        std::uint64_t build_seed = 0, train_seed = 0;
    };
    std::vector<InstanceResult> results(static_cast<size_t>(instances));
    parallel_for(instances, args.jobs, [&](int i) {
        NetworkSpec spec = base_spec;
        spec.seed = seed + static_cast<std::uint64_t>(i) * 7919ULL;
        TrainingConfig cfg = base_training;
        cfg.seed = seed + 104729ULL + static_cast<std::uint64_t>(i) * 15485863ULL;
        InstanceResult& slot = results[static_cast<size_t>(i)];
        slot.build_seed = spec.seed;
        slot.train_seed = cfg.seed;
        slot.result = train(build_model(spec), train_ds, val_ds, cfg);
    });

    size_t best = 0;
    for (size_t i = 1; i < results.size(); ++i)
        if (results[i].result.best_val_rmse < results[best].result.best_val_rmse) best = i;

    Manifest manifest;
    manifest.command = "train";
    manifest.config = config;
    manifest.config["seed"] = seed;
    manifest.inputs = inputs;

    // instance summary
    {
        std::string csv = "instance,build_seed,train_seed,best_epoch,val_rmse\n";
        for (size_t i = 0; i < results.size(); ++i)
            csv += std::to_string(i) + ',' + std::to_string(results[i].build_seed) + ',' +
                   std::to_string(results[i].train_seed) + ',' +
                   std::to_string(results[i].result.best_epoch) + ',' +
                   format_double(results[i].result.best_val_rmse) + '\n';
        write_text_file(args.out_dir + "/instances.csv", csv);
        manifest.outputs.push_back("instances.csv");
    }

    TrainResult& winner = results[best].result;
    winner.network.save_checkpoint(args.out_dir + "/checkpoint.json", results[best].build_seed);
    manifest.outputs.push_back("checkpoint.json");
    write_history_csv(args.out_dir + "/history.csv", winner.history);
    manifest.outputs.push_back("history.csv");

    // evaluate the winning instance on the test recordings
    std::vector<std::string> metric_names;
    std::vector<MetricsReport> metric_rows;
    for (const auto& test : test_recordings) {
        const PredictionSeries raw = predict_recording(winner.network, test.signal);
        const PredictionSeries smoothed = postprocess(raw);
        const std::string base = args.out_dir + "/" + test.ref.name;
        write_prediction_csv(base + "_raw.csv", raw);
        write_prediction_csv(base + ".csv", smoothed);
        manifest.outputs.push_back(test.ref.name + "_raw.csv");
        manifest.outputs.push_back(test.ref.name + ".csv");
        metric_names.push_back(test.ref.name);
        metric_rows.push_back(metrics(smoothed, test.ref5));
    }
    if (!metric_rows.empty()) {
        write_metrics_csv(args.out_dir + "/metrics.csv", metric_names, metric_rows);
        manifest.outputs.push_back("metrics.csv");
    }

    // the linear-combination ablation exports its RGB weights per instance
    if (base_spec.kind == ModelKind::Model1LinearCC && !test_recordings.empty()) {
        std::vector<WeightProjectionRow> rows;
        for (auto& inst : results) {
            WeightProjectionRow row;
            const auto w = linear_cc_weights(inst.result.network);
            row.w_r = w[0];
            row.w_g = w[1];
            row.w_b = w[2];
            double rho_sum = 0.0;
            for (const auto& test : test_recordings) {
                const PredictionSeries raw = predict_recording(inst.result.network, test.signal);
                rho_sum += metrics(postprocess(raw), test.ref5).rho;
            }
            row.rho = rho_sum / static_cast<double>(test_recordings.size());
            rows.push_back(row);
        }
        write_projection_csv(args.out_dir + "/projection.csv", export_weight_projection(rows));
        manifest.outputs.push_back("projection.csv");
    }

    manifest.stamp_outputs(args.out_dir);
    manifest.write(args.out_dir + "/manifest.json");
}

// ---------------------------------------------------------------- tune

void cmd_tune(const TuneArgs& args) {
    const json config = json::parse(read_text_file(args.config_path));
    ensure_dir(args.out_dir);
    std::vector<std::string> inputs = {args.config_path};

    const double lambda = config.value("spline_lambda", 0.0);
    const ModelKind kind = model_kind_from_name(config.at("model_kind").get<std::string>());
    std::uint64_t seed = config.value("seed", std::uint64_t{1});
    if (args.seed_given) seed = args.seed;

    SearchSpace space;
    if (config.contains("search_space_file")) {
        space = search_space_from_json_file(config["search_space_file"].get<std::string>());
        inputs.push_back(config["search_space_file"].get<std::string>());
    }

    const LoadedRecording rec =
        load_recording(recording_from_json(config.at("train_recording"), "train"), lambda);
    inputs.push_back(rec.ref.signal_path);
    inputs.push_back(rec.ref.ref_path);
    inputs.push_back(rec.ref.annotation_path);
    CycleSplit split = split_recording(rec);
    if (split.train.empty() || split.val.empty())
        throw Error(ErrorCode::EmptyDataset, "empty train or validation split");

    TrainingConfig base_training = training_from_config(config.value("training", json::object()));
    const NetworkSpec base = default_spec(kind);

    const Objective objective = [&](const TunerConfig& cfg, int epochs, std::uint64_t obj_seed) {
        NetworkSpec spec = base;
        spec.enforce_budget = false;
        spec.dropout_p = cfg.dropout_p;
        spec.batch_norm = cfg.batch_norm;
        if (!spec.conv_filters.empty()) {
            const double scale = static_cast<double>(cfg.filters) / spec.conv_filters.front();
            const int shift = cfg.kernel - spec.conv_kernels.front();
            for (auto& f : spec.conv_filters) f = std::max(2, static_cast<int>(std::lround(f * scale)));
            for (auto& k : spec.conv_kernels) k = std::clamp(k + shift, 2, 31);
        }
        if (!spec.dense_nodes.empty())
            for (auto& nodes : spec.dense_nodes) nodes = cfg.nodes;
        spec.seed = obj_seed;
        TrainingConfig tc = base_training;
        tc.learning_rate = cfg.learning_rate;
        tc.epochs = epochs;
        tc.seed = obj_seed + 31337ULL;
        return train(build_model(spec), split.train, split.val, tc).best_val_rmse;
    };

    const HyperbandPlan hb_plan = plan(config.value("max_epochs", 27), config.value("eta", 3));
    const TuningResult result = run_hyperband(space, hb_plan, objective, seed);

    write_tuning_log_csv(args.out_dir + "/tuning_log.csv", result.log);
    json best;
    best["learning_rate"] = result.best_config.learning_rate;
    best["filters"] = result.best_config.filters;
    best["kernel"] = result.best_config.kernel;
    best["nodes"] = result.best_config.nodes;
    best["dropout_p"] = result.best_config.dropout_p;
    best["batch_norm"] = result.best_config.batch_norm;
    best["val_rmse"] = result.best_val_rmse;
    best["epochs_spent"] = result.epochs_spent;
    write_text_file(args.out_dir + "/best_config.json", best.dump(2) + "\n");

    Manifest manifest;
    manifest.command = "tune";
    manifest.config = config;
    manifest.config["seed"] = seed;
    manifest.inputs = inputs;
    manifest.outputs = {"tuning_log.csv", "best_config.json"};
    manifest.stamp_outputs(args.out_dir);
    manifest.write(args.out_dir + "/manifest.json");
}

// ---------------------------------------------------------------- eval

void cmd_eval(const EvalArgs& args) {
    const PredictionSeries raw = read_prediction_csv(args.pred_csv);
    const ReferenceSeries ref5 = load_reference_5hz(args.ref_csv, args.spline_lambda);
    ensure_dir(args.out_dir);

    const PredictionSeries smoothed = raw.postprocessed ? raw : postprocess(raw);
    const MetricsReport report = metrics(smoothed, ref5);

    write_prediction_csv(args.out_dir + "/predictions.csv", smoothed);
    write_metrics_csv(args.out_dir + "/metrics.csv", {args.name}, {report});

    Manifest manifest;
    manifest.command = "eval";
    manifest.config = {{"pred", args.pred_csv},
                       {"ref", args.ref_csv},
                       {"name", args.name},
                       {"spline_lambda", args.spline_lambda}};
    manifest.inputs = {args.pred_csv, args.ref_csv};
    manifest.outputs = {"predictions.csv", "metrics.csv"};
    manifest.stamp_outputs(args.out_dir);
    manifest.write(args.out_dir + "/manifest.json");
}

// ---------------------------------------------------------------- bayes

namespace {

std::vector<double> read_value_column(const std::string& path) {
    const CsvTable table = read_csv(path);
    const int col = table.column("value");
    std::vector<double> values;
    for (const auto& row : table.rows) values.push_back(parse_double(row[col]));
    return values;
}

}  // namespace

void cmd_bayes(const BayesArgs& args) {
    const std::vector<double> a = read_value_column(args.group_a_csv);
    const std::vector<double> b = read_value_column(args.group_b_csv);

    BestOptions opts;
    opts.rope_lo = args.rope_lo;
    opts.rope_hi = args.rope_hi;
    opts.seed = args.seed;
    const GroupComparisonResult result = best_test(a, b, opts);
    write_comparison_json(args.out_json, result);

    Manifest manifest;
    manifest.command = "bayes";
    manifest.config = {{"group_a", args.group_a_csv},
                       {"group_b", args.group_b_csv},
                       {"rope", {args.rope_lo, args.rope_hi}},
                       {"seed", args.seed}};
    manifest.inputs = {args.group_a_csv, args.group_b_csv};
    manifest.outputs = {args.out_json};
    manifest.stamp_outputs("");
    manifest.write(args.out_json + ".manifest.json");
}

// ---------------------------------------------------------------- viz

void cmd_viz(const VizArgs& args) {
    const CsvTable table = read_csv(args.csv_path);
    std::string kind = args.kind;
    if (kind == "auto") {
        if (!table.header.empty() && table.header[0] == "epoch")
            kind = "history";
        else if (!table.header.empty() && table.header[0] == "wR")
            kind = "projection";
        else
            kind = "series";
    }

    std::vector<SvgSeries> series;
    if (kind == "history") {
        SvgSeries train_curve, val_curve;
        train_curve.label = "train_rmse";
        val_curve.label = "val_rmse";
        val_curve.color = "#d62728";
        const int ce = table.column("epoch"), ct = table.column("train_rmse"), cv = table.column("val_rmse");
        for (const auto& row : table.rows) {
            train_curve.x.push_back(parse_double(row[ce]));
            train_curve.y.push_back(parse_double(row[ct]));
            val_curve.x.push_back(parse_double(row[ce]));
            val_curve.y.push_back(parse_double(row[cv]));
        }
        series = {train_curve, val_curve};
        write_svg_plot(args.out_svg, "Training history", "epoch", "RMSE (%)", series);
    } else if (kind == "projection") {
        SvgSeries rb, rg;
        rb.label = "RB plane";
        rb.scatter = true;
        rg.label = "RG plane";
        rg.scatter = true;
        rg.color = "#2ca02c";
        const int cr = table.column("wR"), cg = table.column("wG"), cb = table.column("wB");
        for (const auto& row : table.rows) {
            rb.x.push_back(parse_double(row[cr]));
            rb.y.push_back(parse_double(row[cb]));
            rg.x.push_back(parse_double(row[cr]));
            rg.y.push_back(parse_double(row[cg]));
        }
        series = {rb, rg};
        write_svg_plot(args.out_svg, "Channel combination weights", "w_R", "w_B / w_G", series);
    } else {
        const int ct = table.column("t");
        static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
        int color = 0;
        for (size_t c = 0; c < table.header.size(); ++c) {
            if (static_cast<int>(c) == ct) continue;
            SvgSeries s;
            s.label = table.header[c];
            s.color = palette[color++ % 4];
            for (const auto& row : table.rows) {
                s.x.push_back(parse_double(row[ct]));
                s.y.push_back(parse_double(row[c]));
            }
            series.push_back(std::move(s));
        }
        write_svg_plot(args.out_svg, "Series", "t (s)", "value", series);
    }

    Manifest manifest;
    manifest.command = "viz";
    manifest.config = {{"csv", args.csv_path}, {"kind", kind}};
    manifest.inputs = {args.csv_path};
    manifest.outputs = {args.out_svg};
    manifest.stamp_outputs("");
    manifest.write(args.out_svg + ".manifest.json");
}

}  // namespace spo2::tools
