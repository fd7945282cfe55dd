#include <cstdio>
#include <string>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "commands.hpp"
#include "spo2/common.hpp"

using namespace spo2;
using namespace spo2::tools;

namespace {

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::ConfigError:
        case ErrorCode::IoError:
            return 2;
        default:
            return 1;
    }
}

void print_error_json(const std::string& code, const std::string& message) {
    nlohmann::json j;
    j["error"] = code;
    j["message"] = message;
    std::fprintf(stderr, "%s\n", j.dump().c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Contactless SpO2 estimation pipeline"};
    app.require_subcommand(1);

    ExtractArgs extract;
    auto* cmd_ex = app.add_subcommand("extract", "Extract skin color signals from a frame directory");
    cmd_ex->add_option("--frames", extract.frames_dir, "Directory of PPM/PNG frames")->required();
    cmd_ex->add_option("--out", extract.out_csv, "Output signal CSV")->required();
    cmd_ex->add_option("--fps", extract.fps, "Frame rate when no metadata.json is present");
    cmd_ex->add_option("--source-id", extract.source_id, "Recording identifier");
    cmd_ex->add_flag("--low-chroma-skin", extract.low_chroma_skin, "Skin is the lower-Cr class");

    SimulateArgs simulate;
    auto* cmd_sim = app.add_subcommand("simulate", "Generate synthetic recordings");
    cmd_sim->add_option("--out-dir", simulate.out_dir, "Output directory")->required();
    cmd_sim->add_option("--config", simulate.config_path, "Generator config JSON");
    cmd_sim->add_option("--participant-id", simulate.participant_id, "Participant identifier");
    cmd_sim->add_option("--recordings", simulate.recordings, "Number of recordings");
    cmd_sim->add_flag("--render", simulate.render, "Also render PPM frames");
    auto* sim_seed = cmd_sim->add_option("--seed", simulate.seed, "Generator seed");

    DatasetArgs dataset;
    auto* cmd_ds = app.add_subcommand("dataset", "Build and summarize a segment dataset");
    cmd_ds->add_option("--signal", dataset.signal_csv, "Signal CSV")->required();
    cmd_ds->add_option("--ref", dataset.ref_csv, "Reference CSV at 1 Hz")->required();
    cmd_ds->add_option("--annotation", dataset.annotation_json, "Annotation JSON")->required();
    cmd_ds->add_option("--out", dataset.out_summary, "Summary JSON path")->required();
    cmd_ds->add_option("--spline-lambda", dataset.spline_lambda, "Reference spline smoothing");

    TrainArgs train;
    auto* cmd_tr = app.add_subcommand("train", "Train a model per the config");
    cmd_tr->add_option("--config", train.config_path, "Training config JSON")->required();
    cmd_tr->add_option("--out-dir", train.out_dir, "Output directory")->required();
    cmd_tr->add_option("--jobs", train.jobs, "Parallel training instances");
    auto* tr_seed = cmd_tr->add_option("--seed", train.seed, "Override the config seed");

    TuneArgs tune;
    auto* cmd_tu = app.add_subcommand("tune", "HyperBand hyperparameter search");
    cmd_tu->add_option("--config", tune.config_path, "Tuning config JSON")->required();
    cmd_tu->add_option("--out-dir", tune.out_dir, "Output directory")->required();
    cmd_tu->add_option("--jobs", tune.jobs, "Worker cap (rung evaluations)");
    auto* tu_seed = cmd_tu->add_option("--seed", tune.seed, "Override the config seed");

    EvalArgs eval;
    auto* cmd_ev = app.add_subcommand("eval", "Post-process predictions and compute metrics");
    cmd_ev->add_option("--pred", eval.pred_csv, "Raw prediction CSV")->required();
    cmd_ev->add_option("--ref", eval.ref_csv, "Reference CSV at 1 Hz")->required();
    cmd_ev->add_option("--out-dir", eval.out_dir, "Output directory")->required();
    cmd_ev->add_option("--name", eval.name, "Recording name for the metrics row");
    cmd_ev->add_option("--spline-lambda", eval.spline_lambda, "Reference spline smoothing");

    BayesArgs bayes;
    auto* cmd_by = app.add_subcommand("bayes", "Bayesian two-group ROPE comparison");
    cmd_by->add_option("--group-a", bayes.group_a_csv, "CSV with a 'value' column")->required();
    cmd_by->add_option("--group-b", bayes.group_b_csv, "CSV with a 'value' column")->required();
    cmd_by->add_option("--out", bayes.out_json, "Report JSON path")->required();
    cmd_by->add_option("--rope-lo", bayes.rope_lo, "ROPE lower bound");
    cmd_by->add_option("--rope-hi", bayes.rope_hi, "ROPE upper bound");
    cmd_by->add_option("--seed", bayes.seed, "MCMC seed");

    VizArgs viz;
    auto* cmd_vz = app.add_subcommand("viz", "Render a CSV artifact as SVG");
    cmd_vz->add_option("--csv", viz.csv_path, "Input CSV")->required();
    cmd_vz->add_option("--out", viz.out_svg, "Output SVG")->required();
    cmd_vz->add_option("--kind", viz.kind, "series|history|projection|auto");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error_json("UsageError", e.what());
        return 2;
    }

    simulate.seed_given = sim_seed->count() > 0;
    train.seed_given = tr_seed->count() > 0;
    tune.seed_given = tu_seed->count() > 0;

    try {
        if (app.got_subcommand("extract")) cmd_extract(extract);
        if (app.got_subcommand("simulate")) cmd_simulate(simulate);
        if (app.got_subcommand("dataset")) cmd_dataset(dataset);
        if (app.got_subcommand("train")) cmd_train(train);
        if (app.got_subcommand("tune")) cmd_tune(tune);
        if (app.got_subcommand("eval")) cmd_eval(eval);
        if (app.got_subcommand("bayes")) cmd_bayes(bayes);
        if (app.got_subcommand("viz")) cmd_viz(viz);
    } catch (const Error& e) {
        print_error_json(error_code_name(e.code()), e.what());
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        print_error_json("InternalError", e.what());
        return 1;
    }
    return 0;
}
