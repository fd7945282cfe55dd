#ifndef SPO2_TOOLS_COMMANDS_HPP
#define SPO2_TOOLS_COMMANDS_HPP

#include <cstdint>
#include <string>

namespace spo2::tools {

struct ExtractArgs {
    std::string frames_dir;
    std::string out_csv;
    double fps = 30.0;
    std::string source_id;
    bool low_chroma_skin = false;
};
void cmd_extract(const ExtractArgs& args);

struct SimulateArgs {
    std::string out_dir;
    std::string config_path;  // optional generator config JSON
    std::string participant_id = "synth01";
    int recordings = 2;
    bool render = false;
    std::uint64_t seed = 1;
    bool seed_given = false;
};
void cmd_simulate(const SimulateArgs& args);

struct DatasetArgs {
    std::string signal_csv;
    std::string ref_csv;
    std::string annotation_json;
    std::string out_summary;
    double spline_lambda = 0.0;
};
void cmd_dataset(const DatasetArgs& args);

struct TrainArgs {
    std::string config_path;
    std::string out_dir;
    int jobs = 1;
    std::uint64_t seed = 0;  // 0 = take from config
    bool seed_given = false;
};
void cmd_train(const TrainArgs& args);

struct TuneArgs {
    std::string config_path;
    std::string out_dir;
    int jobs = 1;
    std::uint64_t seed = 0;
    bool seed_given = false;
};
void cmd_tune(const TuneArgs& args);

struct EvalArgs {
    std::string pred_csv;
    std::string ref_csv;
    std::string out_dir;
    std::string name = "recording";
    double spline_lambda = 0.0;
};
void cmd_eval(const EvalArgs& args);

struct BayesArgs {
    std::string group_a_csv;
    std::string group_b_csv;
    std::string out_json;
    double rope_lo = -0.03;
    double rope_hi = 0.03;
    std::uint64_t seed = 1;
};
void cmd_bayes(const BayesArgs& args);

struct VizArgs {
    std::string csv_path;
    std::string out_svg;
    std::string kind = "auto";  // auto|series|history|projection
};
void cmd_viz(const VizArgs& args);

}  // namespace spo2::tools

#endif
