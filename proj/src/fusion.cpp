#include "hcsp/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hcsp/error.hpp"

namespace hcsp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

int side(int sign) { return sign < 0 ? 0 : 1; }

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

void check_row(const std::array<double, 2>& row, const char* name) {
    for (double v : row) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            fail(ErrorKind::Parameter, std::string(name) + " has a negative or non-finite entry");
        }
    }
    if (std::abs(row[0] + row[1] - 1.0) > 1e-12) {
        std::ostringstream os;
        os << name << " row sums to " << row[0] + row[1] << ", not 1";
        fail(ErrorKind::Parameter, os.str());
    }
}

}  // namespace

void InterLevelPrior::validate() const {
    check_row(p_L1, "p_L1");
    for (const auto& r : p_L2_given_L1) check_row(r, "p_L2_given_L1");
    for (const auto& r : p_L3_given_L2) check_row(r, "p_L3_given_L2");
}

double InterLevelPrior::log_prior(const GestureClass& g) const {
    const int h = side(static_cast<int>(g.hand));
    const int f = side(static_cast<int>(g.fingers));
    const int t = side(static_cast<int>(g.thumb));
    return safe_log(p_L3_given_L2[f][t]) + safe_log(p_L2_given_L1[h][f]) + safe_log(p_L1[h]);
}

int GesturePMF::argmax() const noexcept {
    int best = 0;
    for (int i = 1; i < kNumGestures; ++i) {
        if (p[i] > p[best]) best = i;
    }
    return best;
}

LevelLogLik level_log_likelihoods(const LevelClassifier& clf, std::span<const WindowStats> windows) {
    if (windows.empty()) fail(ErrorKind::Parameter, "no evidence windows");
    LevelLogLik out;
    for (const auto& w : windows) {
        const auto [n, p] = clf.window_log_likelihoods(w);
        out.neg += n;
        out.pos += p;
    }
    return out;
}

LevelLogLik level_log_likelihoods(const LevelClassifier& clf, std::span<const EvidenceWindow> windows) {
    std::vector<WindowStats> stats;
    stats.reserve(windows.size());
    for (const auto& w : windows) {
        if (w.data.rows() != clf.filter.channels()) {
            fail(ErrorKind::Model, "evidence has " + std::to_string(w.data.rows()) + " channels, model expects " +
                                       std::to_string(clf.filter.channels()));
        }
        stats.push_back(window_stats(w.data));
    }
    return level_log_likelihoods(clf, std::span<const WindowStats>(stats));
}

GesturePMF normalize_log_mass(const std::array<double, kNumGestures>& log_mass) {
    const double top = *std::max_element(log_mass.begin(), log_mass.end());
    if (!std::isfinite(top)) fail(ErrorKind::Parameter, "posterior has no leaf with finite mass");
    GesturePMF pmf;
    double total = 0.0;
    for (int i = 0; i < kNumGestures; ++i) {
        pmf.p[i] = std::exp(log_mass[i] - top);
        total += pmf.p[i];
    }
    for (auto& v : pmf.p) v /= total;
    return pmf;
}

GesturePMF posterior_from_leaf_loglik(const std::array<double, kNumGestures>& leaf_loglik,
                                      const InterLevelPrior& prior) {
    std::array<double, kNumGestures> mass{};
    for (int i = 0; i < kNumGestures; ++i) {
        mass[i] = leaf_loglik[i] + prior.log_prior(GestureClass::from_leaf_index(i));
    }
    return normalize_log_mass(mass);
}

GesturePMF posterior(const LevelLogLik& l1, const LevelLogLik& l2, const LevelLogLik& l3,
                     const InterLevelPrior& prior) {
    std::array<double, kNumGestures> leaf{};
    for (int i = 0; i < kNumGestures; ++i) {
        const auto g = GestureClass::from_leaf_index(i);
        leaf[i] = l1.at(g.sign_at(1)) + l2.at(g.sign_at(2)) + l3.at(g.sign_at(3));
    }
    return posterior_from_leaf_loglik(leaf, prior);
}

namespace {

// Per classifier, per window log-likelihood pairs.
std::vector<std::vector<LevelLogLik>> window_terms(const ModelBundle& model, std::span<const WindowStats> windows) {
    std::vector<std::vector<LevelLogLik>> out(model.classifiers.size());
    for (std::size_t c = 0; c < model.classifiers.size(); ++c) {
        out[c].reserve(windows.size());
        for (const auto& w : windows) {
            const auto [n, p] = model.classifiers[c].window_log_likelihoods(w);
            out[c].push_back({n, p});
        }
    }
    return out;
}

// Index of the classifier scoring each (level, leaf).
std::array<std::array<std::size_t, kNumGestures>, kNumLevels> routing(const ModelBundle& model) {
    std::array<std::array<std::size_t, kNumGestures>, kNumLevels> r{};
    for (int lvl = 1; lvl <= kNumLevels; ++lvl) {
        for (int i = 0; i < kNumGestures; ++i) {
            const auto& clf = model.classifier_for(static_cast<Level>(lvl), GestureClass::from_leaf_index(i));
            r[lvl - 1][i] = static_cast<std::size_t>(&clf - model.classifiers.data());
        }
    }
    return r;
}

std::array<double, kNumGestures> leaf_sum(const std::array<std::array<std::size_t, kNumGestures>, kNumLevels>& route,
                                          const std::vector<LevelLogLik>& per_classifier) {
    std::array<double, kNumGestures> leaf{};
    for (int i = 0; i < kNumGestures; ++i) {
        const auto g = GestureClass::from_leaf_index(i);
        for (int lvl = 1; lvl <= kNumLevels; ++lvl) leaf[i] += per_classifier[route[lvl - 1][i]].at(g.sign_at(lvl));
    }
    return leaf;
}

}  // namespace

std::array<double, kNumGestures> leaf_log_likelihoods(const ModelBundle& model, std::span<const WindowStats> windows) {
    std::vector<LevelLogLik> per_classifier;
    per_classifier.reserve(model.classifiers.size());
    for (const auto& c : model.classifiers) per_classifier.push_back(level_log_likelihoods(c, windows));
    return leaf_sum(routing(model), per_classifier);
}

EpochDecision decide_from_posteriors(std::span<const GesturePMF> per_interval, double threshold) {
    if (per_interval.empty()) fail(ErrorKind::Parameter, "no evidence intervals to decide from");
    std::size_t best = 0;
    for (std::size_t t = 0; t < per_interval.size(); ++t) {
        const auto& pmf = per_interval[t];
        if (pmf.max() >= threshold) {
            return {GestureClass::from_leaf_index(pmf.argmax()), pmf, static_cast<int>(t + 1), true};
        }
        if (pmf.max() > per_interval[best].max()) best = t;
    }
    const auto& pmf = per_interval[best];
    return {GestureClass::from_leaf_index(pmf.argmax()), pmf, static_cast<int>(best + 1), false};
}

std::vector<GesturePMF> interval_posteriors(const ModelBundle& model, std::span<const WindowStats> windows,
                                            const InterLevelPrior& prior, int max_intervals) {
    const std::size_t n = std::min<std::size_t>(windows.size(), static_cast<std::size_t>(std::max(max_intervals, 0)));
    if (n == 0) fail(ErrorKind::Parameter, "no evidence intervals available");
    const auto terms = window_terms(model, windows.first(n));
    const auto route = routing(model);
    const bool cumulative = model.train.evidence_mode == EvidenceMode::Subwindows;

    std::vector<GesturePMF> out;
    out.reserve(n);
    std::vector<LevelLogLik> acc(model.classifiers.size());
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t c = 0; c < acc.size(); ++c) {
            if (cumulative) {
                acc[c].neg += terms[c][t].neg;
                acc[c].pos += terms[c][t].pos;
            } else {
                acc[c] = terms[c][t];
            }
        }
        out.push_back(posterior_from_leaf_loglik(leaf_sum(route, acc), prior));
    }
    return out;
}

EpochDecision decide(const ModelBundle& model, std::span<const WindowStats> windows, const InterLevelPrior& prior,
                     const DecisionPolicy& policy) {
    if (policy.max_intervals < 1) fail(ErrorKind::Parameter, "N must be at least 1");
    const int limit = std::min(policy.max_intervals, model.train.t_intervals);
    const auto posteriors = interval_posteriors(model, windows, prior, limit);
    return decide_from_posteriors(posteriors, policy.threshold);
}

EpochDecision decide(const ModelBundle& model, const TrialMatrix& raw_trial, double onset_s,
                     const InterLevelPrior& prior, const DecisionPolicy& policy) {
    if (raw_trial.channels() != static_cast<Eigen::Index>(model.channel_names.size())) {
        fail(ErrorKind::Model, "trial has " + std::to_string(raw_trial.channels()) + " channels, model expects " +
                                   std::to_string(model.channel_names.size()));
    }
    if (raw_trial.sample_rate_hz != model.sample_rate_hz) {
        fail(ErrorKind::Model, "trial sample rate does not match the model");
    }
    const TrialMatrix filtered = apply_filter(model.preprocess.kernel(model.sample_rate_hz), raw_trial);
    const auto first = static_cast<Eigen::Index>(std::llround(onset_s * filtered.sample_rate_hz));
    if (onset_s < 0 || first >= filtered.samples()) fail(ErrorKind::Parameter, "onset lies outside the trial");
    const TrialMatrix segment{filtered.data.rightCols(filtered.samples() - first), filtered.sample_rate_hz};

    const int n = std::min({available_intervals(segment), model.train.t_intervals, policy.max_intervals});
    if (n < 1) fail(ErrorKind::Parameter, "trial is shorter than one evidence interval");
    std::vector<WindowStats> stats;
    for (const auto& w : make_windows(segment, n, model.train.evidence_mode)) stats.push_back(window_stats(w.data));
    return decide(model, stats, prior, policy);
}

}  // namespace hcsp
