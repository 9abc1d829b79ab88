#include "hcsp/model.hpp"

#include <fstream>
#include <map>

#include "hcsp/error.hpp"
#include "hcsp/parallel.hpp"

namespace hcsp {

namespace fs = std::filesystem;
using nlohmann::json;

FilterKernel PreprocessConfig::kernel(double sample_rate_hz) const {
    return design_bandpass(sample_rate_hz, low_hz, high_hz, num_taps > 0 ? num_taps : default_num_taps(sample_rate_hz));
}

WindowStats window_stats(const Eigen::Ref<const Eigen::MatrixXd>& window) {
    return {normalized_covariance(window), centered_covariance(window)};
}

int EvidenceCache::min_intervals() const {
    if (windows.empty()) return 0;
    std::size_t n = windows.front().size();
    for (const auto& w : windows) n = std::min(n, w.size());
    return static_cast<int>(n);
}

TrialMatrix preprocess_trial(const Trial& trial, const FilterKernel& kernel) {
    const TrialMatrix filtered = apply_filter(kernel, trial.matrix);
    const auto r = segment_range(trial.meta, filtered.sample_rate_hz);
    return {filtered.data.middleCols(r.first, r.count), filtered.sample_rate_hz};
}

EvidenceCache build_evidence_cache(const Dataset& ds, const PreprocessConfig& pre, EvidenceMode mode,
                                   int max_intervals, int workers) {
    EvidenceCache cache;
    cache.mode = mode;
    cache.labels = ds.labels();
    cache.windows.resize(ds.size());
    if (ds.size() == 0) return cache;
    const FilterKernel kernel = pre.kernel(ds.sample_rate_hz);
    parallel_for(ds.size(), workers, [&](std::size_t i) {
        const TrialMatrix seg = preprocess_trial(ds.trials[i], kernel);
        const int n = std::min(max_intervals, available_intervals(seg));
        if (n < 1) {
            fail(ErrorKind::Parameter, "trial " + std::to_string(i) + " is shorter than one evidence interval");
        }
        auto& out = cache.windows[i];
        for (const auto& w : make_windows(seg, n, mode)) out.push_back(window_stats(w.data));
    });
    return cache;
}

Eigen::VectorXd LevelClassifier::features(const WindowStats& w) const {
    return csp_features_from_covariance(filter, w.centered);
}

std::pair<double, double> LevelClassifier::window_log_likelihoods(const WindowStats& w) const {
    if (w.centered.rows() != filter.channels()) {
        fail(ErrorKind::Model, "evidence has " + std::to_string(w.centered.rows()) + " channels, model expects " +
                                   std::to_string(filter.channels()));
    }
    const Eigen::VectorXd F = score(weights, features(w));
    return {log_likelihood(neg, F), log_likelihood(pos, F)};
}

const LevelClassifier& ModelBundle::classifier_for(Level level, const GestureClass& leaf) const {
    for (const auto& c : classifiers) {
        if (c.level == level && c.scope.contains(leaf)) return c;
    }
    fail(ErrorKind::Model, "model has no level " + std::to_string(static_cast<int>(level)) + " classifier for " +
                               leaf.to_string());
}

namespace {

// Windows of one trial that serve as training samples.
std::span<const WindowStats> training_windows(const EvidenceCache& cache, std::size_t trial, int t) {
    const auto& w = cache.windows[trial];
    if (static_cast<int>(w.size()) < t) {
        fail(ErrorKind::Parameter, "trial " + std::to_string(trial) + " has " + std::to_string(w.size()) +
                                       " evidence intervals, training needs " + std::to_string(t));
    }
    if (cache.mode == EvidenceMode::Subwindows) return std::span<const WindowStats>(w.data(), t);
    return std::span<const WindowStats>(w.data() + t - 1, 1);
}

}  // namespace

LevelClassifier train_level(const EvidenceCache& cache, std::span<const std::size_t> trials, Level level,
                            const CategoryScope& scope, const TrainConfig& cfg) {
    std::vector<GestureClass> labels;
    labels.reserve(trials.size());
    for (auto i : trials) labels.push_back(cache.labels.at(i));
    const Partition part = partition(std::span<const GestureClass>(labels), level, scope);

    struct Side {
        std::vector<const WindowStats*> samples;
        CovMatrix category_cov;
    };
    auto collect = [&](const std::vector<std::size_t>& local) {
        Side side;
        // Per-class mean covariance C_j and its sample count N_j.
        std::map<int, std::pair<Eigen::MatrixXd, int>> per_class;
        for (auto li : local) {
            const std::size_t trial = trials[li];
            const int leaf = cache.labels[trial].leaf_index();
            for (const auto& ws : training_windows(cache, trial, cfg.t_intervals)) {
                side.samples.push_back(&ws);
                auto& [sum, count] = per_class[leaf];
                if (count == 0) sum = Eigen::MatrixXd::Zero(ws.normalized.dim(), ws.normalized.dim());
                sum += ws.normalized.values;
                ++count;
            }
        }
        std::vector<CovMatrix> covs;
        std::vector<int> counts;
        for (auto& [leaf, sc] : per_class) {
            covs.push_back({sc.first / static_cast<double>(sc.second)});
            counts.push_back(sc.second);
        }
        side.category_cov = category_covariance(covs, counts);
        return side;
    };
    const Side neg = collect(part.neg);
    const Side pos = collect(part.pos);

    LevelClassifier clf;
    clf.level = level;
    clf.scope = scope;
    clf.filter = solve_csp(neg.category_cov, pos.category_cov, cfg.k);

    auto features_of = [&](const Side& s) {
        std::vector<Eigen::VectorXd> out;
        out.reserve(s.samples.size());
        for (const auto* ws : s.samples) out.push_back(clf.features(*ws));
        return out;
    };
    const auto f_neg = features_of(neg);
    const auto f_pos = features_of(pos);
    clf.weights = fit_fisher(f_neg, f_pos, cfg.lda_mode);

    auto scores_of = [&](const std::vector<Eigen::VectorXd>& fs) {
        std::vector<Eigen::VectorXd> out;
        out.reserve(fs.size());
        for (const auto& f : fs) out.push_back(score(clf.weights, f));
        return out;
    };
    clf.neg = fit_density(scores_of(f_neg));
    clf.pos = fit_density(scores_of(f_pos));
    return clf;
}

ModelBundle train_model(const EvidenceCache& cache, std::span<const std::size_t> trials, const TrainConfig& cfg) {
    if (trials.empty()) fail(ErrorKind::Training, "no training trials");
    ModelBundle model;
    model.train = cfg;
    for (const auto& [level, scope] : classifier_scopes(cfg.topology == Topology::PerBranch)) {
        model.classifiers.push_back(train_level(cache, trials, level, scope, cfg));
    }
    return model;
}

const char* to_string(Topology t) { return t == Topology::Pooled ? "pooled" : "per_branch"; }
const char* to_string(EvidenceMode m) { return m == EvidenceMode::Subwindows ? "subwindows" : "growing"; }
const char* to_string(LdaMode m) { return m == LdaMode::PerComponent ? "per_component" : "joint"; }

// --- serialization ---------------------------------------------------------

namespace {

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::MatrixXd matrix_from(const json& j, const char* what) {
    if (!j.is_array() || j.empty()) fail(ErrorKind::Model, std::string(what) + " must be a non-empty nested array");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (!j[r].is_array() || static_cast<Eigen::Index>(j[r].size()) != cols) {
            fail(ErrorKind::Model, std::string(what) + " is ragged");
        }
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

Eigen::VectorXd vector_from(const json& j, const char* what) {
    if (!j.is_array()) fail(ErrorKind::Model, std::string(what) + " must be an array");
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

template <typename E>
E enum_from(const json& j, const char* key, const char* a, E ea, const char* b, E eb) {
    const auto s = j.at(key).get<std::string>();
    if (s == a) return ea;
    if (s == b) return eb;
    fail(ErrorKind::Model, std::string("unknown ") + key + " '" + s + "'");
}

json density_json(const GaussianDensity& d) {
    return {{"mean", vector_json(d.mean())}, {"covariance", matrix_json(d.covariance())}};
}

GaussianDensity density_from(const json& j) {
    return {vector_from(j.at("mean"), "density mean"), matrix_from(j.at("covariance"), "density covariance")};
}

}  // namespace

json model_to_json(const ModelBundle& model) {
    json j;
    j["format_version"] = ModelBundle::kFormatVersion;
    j["sample_rate_hz"] = model.sample_rate_hz;
    j["channels"] = model.channel_names;
    j["preprocess"] = {{"low_hz", model.preprocess.low_hz},
                       {"high_hz", model.preprocess.high_hz},
                       {"num_taps", model.preprocess.num_taps}};
    j["k"] = model.train.k;
    j["t_intervals"] = model.train.t_intervals;
    j["evidence_mode"] = to_string(model.train.evidence_mode);
    j["classifier_topology"] = to_string(model.train.topology);
    j["lda_mode"] = to_string(model.train.lda_mode);
    j["classifiers"] = json::array();
    for (const auto& c : model.classifiers) {
        j["classifiers"].push_back({
            {"level", static_cast<int>(c.level)},
            {"branch", c.scope.path},
            {"spatial_filter", {{"V", matrix_json(c.filter.V)}, {"D", vector_json(c.filter.D)}, {"k", c.filter.k}}},
            {"fisher_weights", vector_json(c.weights.w)},
            {"density_neg", density_json(c.neg)},
            {"density_pos", density_json(c.pos)},
        });
    }
    return j;
}

ModelBundle model_from_json(const json& j) {
    try {
        const int version = j.at("format_version").get<int>();
        if (version != ModelBundle::kFormatVersion) {
            fail(ErrorKind::Model, "unsupported model format_version " + std::to_string(version));
        }
        ModelBundle m;
        m.sample_rate_hz = j.at("sample_rate_hz").get<double>();
        m.channel_names = j.at("channels").get<std::vector<std::string>>();
        const auto& p = j.at("preprocess");
        m.preprocess = {p.at("low_hz").get<double>(), p.at("high_hz").get<double>(), p.at("num_taps").get<int>()};
        m.train.k = j.at("k").get<int>();
        m.train.t_intervals = j.at("t_intervals").get<int>();
        m.train.evidence_mode = enum_from(j, "evidence_mode", "subwindows", EvidenceMode::Subwindows, "growing",
                                          EvidenceMode::Growing);
        m.train.topology =
            enum_from(j, "classifier_topology", "pooled", Topology::Pooled, "per_branch", Topology::PerBranch);
        m.train.lda_mode =
            enum_from(j, "lda_mode", "per_component", LdaMode::PerComponent, "joint", LdaMode::Joint);
        for (const auto& jc : j.at("classifiers")) {
            LevelClassifier c;
            const int level = jc.at("level").get<int>();
            if (level < 1 || level > 3) fail(ErrorKind::Model, "classifier level must be 1..3");
            c.level = static_cast<Level>(level);
            c.scope.path = jc.at("branch").get<std::vector<int>>();
            const auto& sf = jc.at("spatial_filter");
            c.filter.V = matrix_from(sf.at("V"), "spatial filter V");
            c.filter.D = vector_from(sf.at("D"), "spatial filter D");
            c.filter.k = sf.at("k").get<int>();
            c.weights.w = vector_from(jc.at("fisher_weights"), "fisher weights");
            c.weights.mode = m.train.lda_mode;
            c.neg = density_from(jc.at("density_neg"));
            c.pos = density_from(jc.at("density_pos"));
            if (c.filter.V.rows() != static_cast<Eigen::Index>(m.channel_names.size()) ||
                c.weights.w.size() != 2 * c.filter.k || c.neg.dim() != c.weights.score_dim() ||
                c.pos.dim() != c.weights.score_dim()) {
                fail(ErrorKind::Model, "classifier dimensions are inconsistent");
            }
            m.classifiers.push_back(std::move(c));
        }
        return m;
    } catch (const json::exception& e) {
        fail(ErrorKind::Model, std::string("malformed model file: ") + e.what());
    }
}

void save_model(const ModelBundle& model, const fs::path& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot create " + path.string());
    out << model_to_json(model).dump(1) << '\n';
    if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

ModelBundle load_model(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Load, "cannot open model file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Model, "model file " + path.string() + " is not valid JSON: " + e.what());
    }
    return model_from_json(j);
}

}  // namespace hcsp
