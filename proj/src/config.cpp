#include "hcsp/config.hpp"

#include <fstream>
#include <set>

#include "hcsp/error.hpp"

namespace hcsp {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& why) { fail(ErrorKind::Config, field + ": " + why); }

template <typename T>
T get(const json& j, const char* key, const std::string& field, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        bad(field, "has the wrong type");
    }
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) bad(where + key, "unknown field");
    }
}

std::array<double, 2> row_of(const json& j, const std::string& field) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        bad(field, "must be an array of 2 numbers");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

TrainConfig RunConfig::train_config() const { return {k, t_max, evidence_mode, topology, lda_mode}; }

RunOptions RunConfig::run_options() const {
    RunOptions o;
    o.preprocess = preprocess;
    o.train = train_config();
    o.prior = prior;
    o.policy = {threshold, N};
    o.workers = workers;
    return o;
}

void RunConfig::validate() const {
    if (!(preprocess.low_hz > 0)) bad("band.low_hz", "must be positive");
    if (!(preprocess.high_hz > preprocess.low_hz)) bad("band.high_hz", "must exceed band.low_hz");
    if (preprocess.num_taps != 0 && (preprocess.num_taps < 3 || preprocess.num_taps % 2 == 0)) {
        bad("num_taps", "must be 0 (automatic) or an odd number >= 3");
    }
    if (k < 1) bad("k", "must be >= 1");
    if (t_max < 1) bad("t_max", "must be >= 1");
    if (!(threshold >= 0.0 && threshold <= 1.0)) bad("threshold", "must lie in [0, 1]");
    if (N < 1) bad("N", "must be >= 1");
    if (workers < 1) bad("workers", "must be >= 1");
    for (int fc : feature_counts) {
        if (fc < 2 || fc % 2 != 0) bad("grid.feature_counts", "entries must be positive even numbers");
    }
    if (window_lengths.empty()) bad("grid.window_lengths", "must not be empty");
    for (int t : window_lengths) {
        if (t < 1) bad("grid.window_lengths", "entries must be >= 1");
    }
    try {
        prior.validate();
    } catch (const Error& e) {
        bad("priors", e.what());
    }
}

InterLevelPrior parse_prior(const json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "uniform") return InterLevelPrior::uniform();
        bad("priors", "must be \"uniform\" or a table object");
    }
    if (!j.is_object()) bad("priors", "must be \"uniform\" or a table object");
    reject_unknown(j, {"p_L1", "p_L2_given_L1", "p_L3_given_L2"}, "priors.");
    InterLevelPrior p;
    if (j.contains("p_L1")) p.p_L1 = row_of(j["p_L1"], "priors.p_L1");
    for (auto [key, table] : {std::pair{"p_L2_given_L1", &p.p_L2_given_L1}, std::pair{"p_L3_given_L2", &p.p_L3_given_L2}}) {
        if (!j.contains(key)) continue;
        const std::string field = std::string("priors.") + key;
        if (!j[key].is_array() || j[key].size() != 2) bad(field, "must be a 2x2 table");
        (*table)[0] = row_of(j[key][0], field);
        (*table)[1] = row_of(j[key][1], field);
    }
    return p;
}

RunConfig parse_config(const json& j) {
    if (!j.is_object()) bad("config", "must be a JSON object");
    reject_unknown(j,
                   {"band", "num_taps", "k", "t_max", "evidence_mode", "classifier_topology", "lda_mode", "threshold",
                    "N", "priors", "seed", "workers", "synth", "grid"},
                   "");
    RunConfig c;
    if (j.contains("band")) {
        const auto& b = j["band"];
        if (!b.is_object()) bad("band", "must be an object");
        reject_unknown(b, {"low_hz", "high_hz"}, "band.");
        c.preprocess.low_hz = get<double>(b, "low_hz", "band.low_hz", c.preprocess.low_hz);
        c.preprocess.high_hz = get<double>(b, "high_hz", "band.high_hz", c.preprocess.high_hz);
    }
    c.preprocess.num_taps = get<int>(j, "num_taps", "num_taps", c.preprocess.num_taps);
    c.k = get<int>(j, "k", "k", c.k);
    c.t_max = get<int>(j, "t_max", "t_max", c.t_max);
    if (j.contains("evidence_mode")) {
        const auto s = get<std::string>(j, "evidence_mode", "evidence_mode", "");
        if (s == "subwindows") c.evidence_mode = EvidenceMode::Subwindows;
        else if (s == "growing") c.evidence_mode = EvidenceMode::Growing;
        else bad("evidence_mode", "must be \"subwindows\" or \"growing\"");
    }
    if (j.contains("classifier_topology")) {
        const auto s = get<std::string>(j, "classifier_topology", "classifier_topology", "");
        if (s == "pooled") c.topology = Topology::Pooled;
        else if (s == "per_branch") c.topology = Topology::PerBranch;
        else bad("classifier_topology", "must be \"pooled\" or \"per_branch\"");
    }
    if (j.contains("lda_mode")) {
        const auto s = get<std::string>(j, "lda_mode", "lda_mode", "");
        if (s == "per_component") c.lda_mode = LdaMode::PerComponent;
        else if (s == "joint") c.lda_mode = LdaMode::Joint;
        else bad("lda_mode", "must be \"per_component\" or \"joint\"");
    }
    c.threshold = get<double>(j, "threshold", "threshold", c.threshold);
    c.N = get<int>(j, "N", "N", c.N);
    if (j.contains("priors")) {
        c.prior = parse_prior(j["priors"]);
        c.uniform_prior = j["priors"].is_string();
    }
    c.seed = get<std::uint64_t>(j, "seed", "seed", c.seed);
    c.workers = get<int>(j, "workers", "workers", c.workers);

    c.synth.low_hz = c.preprocess.low_hz;
    c.synth.high_hz = c.preprocess.high_hz;
    if (j.contains("synth")) {
        const auto& s = j["synth"];
        if (!s.is_object()) bad("synth", "must be an object");
        reject_unknown(s, {"m", "sample_rate_hz", "trials_per_gesture", "snr", "prepare_s", "imagery_s", "subject_id"},
                       "synth.");
        c.synth.m = get<int>(s, "m", "synth.m", c.synth.m);
        c.synth.sample_rate_hz = get<double>(s, "sample_rate_hz", "synth.sample_rate_hz", c.synth.sample_rate_hz);
        c.synth.trials_per_gesture =
            get<int>(s, "trials_per_gesture", "synth.trials_per_gesture", c.synth.trials_per_gesture);
        c.synth.snr = get<double>(s, "snr", "synth.snr", c.synth.snr);
        c.synth.prepare_s = get<double>(s, "prepare_s", "synth.prepare_s", c.synth.prepare_s);
        c.synth.imagery_s = get<double>(s, "imagery_s", "synth.imagery_s", c.synth.imagery_s);
        c.synth.subject_id = get<std::string>(s, "subject_id", "synth.subject_id", c.synth.subject_id);
    }
    c.synth.seed = c.seed;
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        if (!g.is_object()) bad("grid", "must be an object");
        reject_unknown(g, {"feature_counts", "window_lengths"}, "grid.");
        c.feature_counts = get<std::vector<int>>(g, "feature_counts", "grid.feature_counts", c.feature_counts);
        c.window_lengths = get<std::vector<int>>(g, "window_lengths", "grid.window_lengths", c.window_lengths);
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Load, "cannot open config " + path.string());
    try {
        return parse_config(json::parse(in));
    } catch (const json::parse_error& e) {
        bad("config", std::string("not valid JSON: ") + e.what());
    }
}

json config_json(const RunConfig& c) {
    json prior;
    if (c.uniform_prior) {
        prior = "uniform";
    } else {
        prior = {{"p_L1", c.prior.p_L1}, {"p_L2_given_L1", c.prior.p_L2_given_L1}, {"p_L3_given_L2", c.prior.p_L3_given_L2}};
    }
    return {{"band", {{"low_hz", c.preprocess.low_hz}, {"high_hz", c.preprocess.high_hz}}},
            {"num_taps", c.preprocess.num_taps},
            {"k", c.k},
            {"t_max", c.t_max},
            {"evidence_mode", to_string(c.evidence_mode)},
            {"classifier_topology", to_string(c.topology)},
            {"lda_mode", to_string(c.lda_mode)},
            {"threshold", c.threshold},
            {"N", c.N},
            {"priors", prior},
            {"seed", c.seed},
            {"synth",
             {{"m", c.synth.m},
              {"sample_rate_hz", c.synth.sample_rate_hz},
              {"trials_per_gesture", c.synth.trials_per_gesture},
              {"snr", c.synth.snr},
              {"prepare_s", c.synth.prepare_s},
              {"imagery_s", c.synth.imagery_s},
              {"subject_id", c.synth.subject_id}}},
            {"grid", {{"feature_counts", c.feature_counts}, {"window_lengths", c.window_lengths}}}};
}

}  // namespace hcsp
