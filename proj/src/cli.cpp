#include "hcsp/cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "hcsp/config.hpp"
#include "hcsp/error.hpp"
#include "hcsp/eval.hpp"
#include "hcsp/synthgen.hpp"

namespace hcsp::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<int> workers;
};

RunConfig effective_config(const CommonFlags& f) {
    json j = json::object();
    if (!f.config_path.empty()) {
        std::ifstream in(f.config_path);
        if (!in) fail(ErrorKind::Load, "cannot open config " + f.config_path);
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            fail(ErrorKind::Config, std::string("config: not valid JSON: ") + e.what());
        }
        if (!j.is_object()) fail(ErrorKind::Config, "config: must be a JSON object");
    }
    if (f.seed) j["seed"] = *f.seed;
    if (f.workers) j["workers"] = *f.workers;
    return parse_config(j);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot create " + path.string());
    out << text;
    if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorKind::Io, "cannot create directory " + dir.string() + ": " + ec.message());
}

fs::path manifest_in(const fs::path& dataset) {
    if (fs::is_directory(dataset)) return dataset / "manifest.json";
    if (!fs::exists(dataset)) fail(ErrorKind::Load, "dataset " + dataset.string() + " does not exist");
    return dataset;
}

// Band edges are only checkable against Nyquist once the sample rate is known.
void check_band(const RunConfig& cfg, double sample_rate_hz) {
    if (!(cfg.preprocess.high_hz < sample_rate_hz / 2)) {
        fail(ErrorKind::Config, "band.high_hz: must be below the Nyquist frequency " + std::to_string(sample_rate_hz / 2));
    }
}

int cmd_synth(const CommonFlags& flags, bool csv, std::ostream& out) {
    const RunConfig cfg = effective_config(flags);
    const fs::path dir = flags.out.empty() ? fs::path("synthetic") : fs::path(flags.out);
    const SynthModel model = build_model(cfg.synth);
    const Dataset ds = generate(model, cfg.synth);
    const auto manifest = write_dataset(ds, dir, csv ? TrialFormat::Csv : TrialFormat::Binary);
    write_text(dir / "ground_truth.json", synth_model_json(model, cfg.synth).dump(1) + "\n");
    out << json{{"manifest", manifest.string()}, {"trials", ds.size()}}.dump() << '\n';
    return kOk;
}

int cmd_train(const CommonFlags& flags, const std::string& dataset, std::ostream& out) {
    const RunConfig cfg = effective_config(flags);
    const Dataset ds = load_manifest(manifest_in(dataset));
    if (ds.size() == 0) fail(ErrorKind::Training, "dataset " + dataset + " has no trials");
    check_band(cfg, ds.sample_rate_hz);
    const auto cache =
        build_evidence_cache(ds, cfg.preprocess, cfg.evidence_mode, cfg.t_max, cfg.workers);
    std::vector<std::size_t> all(ds.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    ModelBundle model = train_model(cache, all, cfg.train_config());
    model.sample_rate_hz = ds.sample_rate_hz;
    model.channel_names = ds.channel_names;
    model.preprocess = cfg.preprocess;
    const fs::path path = flags.out.empty() ? fs::path("model.json") : fs::path(flags.out);
    if (path.has_parent_path()) make_dir(path.parent_path());
    save_model(model, path);
    out << json{{"model", path.string()}, {"classifiers", model.classifiers.size()}}.dump() << '\n';
    return kOk;
}

int cmd_classify(const CommonFlags& flags, const std::string& model_path, const std::string& trial_path,
                 double onset_s, std::ostream& out) {
    const RunConfig cfg = effective_config(flags);
    const ModelBundle model = load_model(model_path);
    const fs::path tp(trial_path);
    // CSV trials carry their own channel count; a mismatch is a model error below.
    const auto channels = tp.extension() == ".csv" ? Eigen::Index{0}
                                                   : static_cast<Eigen::Index>(model.channel_names.size());
    const TrialMatrix trial = read_trial_file(tp, channels, model.sample_rate_hz);
    try {
        trial.validate();
    } catch (const Error& e) {
        fail(ErrorKind::Load, "trial file " + trial_path + ": " + e.what());
    }
    const EpochDecision d = decide(model, trial, onset_s, cfg.prior, {cfg.threshold, cfg.N});
    out << decision_json(d, 0).dump() << '\n';
    return kOk;
}

int cmd_eval(const CommonFlags& flags, const std::string& dataset, std::ostream& out) {
    const RunConfig cfg = effective_config(flags);
    const Dataset ds = load_manifest(manifest_in(dataset));
    check_band(cfg, ds.sample_rate_hz);
    const LoocvResult r = loocv(ds, cfg.run_options());
    const fs::path dir = flags.out.empty() ? fs::path("eval_out") : fs::path(flags.out);
    make_dir(dir);
    json report = report_json(r.report);
    report["confusion"] = confusion_json(r.confusion);
    report["effective_config"] = config_json(cfg);
    report["dataset"] = {{"subject_id", ds.subject_id}, {"trials", ds.size()}, {"channels", ds.channels()}};
    write_text(dir / "report.json", report.dump(2) + "\n");
    write_text(dir / "confusion.csv", confusion_csv(r.confusion));
    json decisions = json::array();
    for (std::size_t i = 0; i < r.decisions.size(); ++i) decisions.push_back(decision_json(r.decisions[i], i));
    write_text(dir / "decisions.json", decisions.dump(1) + "\n");
    out << json{{"accuracy", r.report.accuracy}, {"report", (dir / "report.json").string()}}.dump() << '\n';
    return kOk;
}

int cmd_grid(const CommonFlags& flags, const std::string& dataset, std::ostream& out) {
    const RunConfig cfg = effective_config(flags);
    const Dataset ds = load_manifest(manifest_in(dataset));
    check_band(cfg, ds.sample_rate_hz);
    const auto features = cfg.feature_counts.empty() ? default_feature_counts(ds.channels()) : cfg.feature_counts;
    const AccuracySurface s = grid_search(ds, features, cfg.window_lengths, cfg.run_options());
    const fs::path dir = flags.out.empty() ? fs::path("grid_out") : fs::path(flags.out);
    make_dir(dir);
    json j = surface_json(s);
    j["effective_config"] = config_json(cfg);
    j["dataset"] = {{"subject_id", ds.subject_id}, {"trials", ds.size()}, {"channels", ds.channels()}};
    write_text(dir / "surface.json", j.dump(2) + "\n");
    write_text(dir / "surface.csv", surface_csv(s));

    const SurfaceCell* best = nullptr;
    for (const auto& c : s.cells) {
        if (c.result && (!best || c.result->report.accuracy > best->result->report.accuracy)) best = &c;
    }
    json summary = {{"surface", (dir / "surface.json").string()}};
    if (best) {
        summary["best"] = {{"feature_count", best->feature_count},
                           {"t", best->t_intervals},
                           {"accuracy", best->result->report.accuracy}};
    }
    out << summary.dump() << '\n';
    return kOk;
}

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::Config: return kConfig;
        case ErrorKind::Load:
        case ErrorKind::Io: return kIo;
        default: return kModel;
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Hierarchical CSP motor-imagery classifier", "hcsp"};
    app.require_subcommand(1);

    CommonFlags flags;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", flags.config_path, "Run config (JSON)");
        sub->add_option("--seed", flags.seed, "Seed override");
        sub->add_option("--out", flags.out, "Output path");
        sub->add_option("--workers", flags.workers, "Evaluation threads")->check(CLI::PositiveNumber);
    };

    bool csv = false;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
    add_common(synth);
    synth->add_flag("--csv", csv, "Write CSV trial files instead of float32");

    std::string dataset;
    auto* train = app.add_subcommand("train", "Fit a classifier bundle on a whole dataset");
    add_common(train);
    train->add_option("dataset", dataset, "Dataset directory or manifest")->required();

    std::string model_path, trial_path;
    double onset_s = 0.0;
    auto* classify = app.add_subcommand("classify", "Decide the gesture of one trial");
    add_common(classify);
    classify->add_option("model", model_path, "Model file")->required();
    classify->add_option("trial", trial_path, "Trial file (.f32 or .csv)")->required();
    classify->add_option("--onset-s", onset_s, "Start of the motor-imagery segment")->check(CLI::NonNegativeNumber);

    auto* eval = app.add_subcommand("eval", "Leave-one-out evaluation");
    add_common(eval);
    eval->add_option("dataset", dataset, "Dataset directory or manifest")->required();

    auto* grid = app.add_subcommand("grid", "Leave-one-out over a (features x window length) grid");
    add_common(grid);
    grid->add_option("dataset", dataset, "Dataset directory or manifest")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "hcsp: " << e.what() << '\n';
        return kConfig;
    }

    try {
        if (synth->parsed()) return cmd_synth(flags, csv, out);
        if (train->parsed()) return cmd_train(flags, dataset, out);
        if (classify->parsed()) return cmd_classify(flags, model_path, trial_path, onset_s, out);
        if (eval->parsed()) return cmd_eval(flags, dataset, out);
        if (grid->parsed()) return cmd_grid(flags, dataset, out);
    } catch (const Error& e) {
        err << "hcsp: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const json::exception& e) {
        err << "hcsp: " << e.what() << '\n';
        return kModel;
    }
    return kConfig;
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace hcsp::cli
