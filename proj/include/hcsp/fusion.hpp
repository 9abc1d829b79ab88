#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "hcsp/hierarchy.hpp"
#include "hcsp/model.hpp"

namespace hcsp {

/// Inter-level prior tables. Index 0 is the l = -1 side, 1 is l = +1;
/// rows of the conditional tables are indexed by the parent level's side.
struct InterLevelPrior {
    std::array<double, 2> p_L1{0.5, 0.5};
    std::array<std::array<double, 2>, 2> p_L2_given_L1{{{0.5, 0.5}, {0.5, 0.5}}};
    std::array<std::array<double, 2>, 2> p_L3_given_L2{{{0.5, 0.5}, {0.5, 0.5}}};

    static InterLevelPrior uniform() { return {}; }
    /// Parameter error unless every entry is >= 0 and every row sums to 1 within 1e-12.
    void validate() const;
    /// log P(l3 | l2) + log P(l2 | l1) + log P(l1); -inf where a factor is zero.
    double log_prior(const GestureClass& g) const;
};

struct GesturePMF {
    std::array<double, kNumGestures> p{};

    /// Lowest leaf index among the maxima.
    int argmax() const noexcept;
    double max() const noexcept { return p[static_cast<std::size_t>(argmax())]; }
};

/// Pair of (log P(evidence | l = -1), log P(evidence | l = +1)).
struct LevelLogLik {
    double neg = 0.0;
    double pos = 0.0;
    double at(int sign) const noexcept { return sign < 0 ? neg : pos; }
};

/// Sum of per-window log-likelihoods under each category density.
LevelLogLik level_log_likelihoods(const LevelClassifier& clf, std::span<const WindowStats> windows);
LevelLogLik level_log_likelihoods(const LevelClassifier& clf, std::span<const EvidenceWindow> windows);

/// Normalizes per-leaf unnormalized log-masses in log space.
GesturePMF normalize_log_mass(const std::array<double, kNumGestures>& log_mass);

/// Posterior over the 8 leaves from one likelihood pair per level.
GesturePMF posterior(const LevelLogLik& l1, const LevelLogLik& l2, const LevelLogLik& l3,
                     const InterLevelPrior& prior);

/// Posterior from per-leaf summed log-likelihoods (sum over the three levels
/// of the likelihood term that applies to that leaf).
GesturePMF posterior_from_leaf_loglik(const std::array<double, kNumGestures>& leaf_loglik,
                                      const InterLevelPrior& prior);

/// Per-leaf summed log-likelihood of a set of windows under a model. Under the
/// per-branch topology each leaf takes its level 2 and 3 terms from the
/// classifier on its own branch.
std::array<double, kNumGestures> leaf_log_likelihoods(const ModelBundle& model, std::span<const WindowStats> windows);

struct EpochDecision {
    GestureClass gesture;
    GesturePMF pmf;
    int intervals_used = 0;
    bool threshold_met = false;
};

struct DecisionPolicy {
    double threshold = 0.9;  // confidence threshold
    int max_intervals = 5;   // N
};

/// Sequential MAP policy over the posteriors at intervals 1..n: stop at the
/// first interval whose max posterior reaches the threshold, otherwise take
/// the interval with the largest max posterior (earliest on ties).
EpochDecision decide_from_posteriors(std::span<const GesturePMF> per_interval, double threshold);

/// Posteriors at intervals 1..min(N, windows) for one trial's evidence.
/// Subwindows mode accumulates windows 1..t; growing mode scores window t alone.
std::vector<GesturePMF> interval_posteriors(const ModelBundle& model, std::span<const WindowStats> windows,
                                            const InterLevelPrior& prior, int max_intervals);

/// Decides from at most min(N, model t, windows.size()) intervals.
EpochDecision decide(const ModelBundle& model, std::span<const WindowStats> windows, const InterLevelPrior& prior,
                     const DecisionPolicy& policy);

/// Filters a raw trial as the model was trained, drops the samples before
/// `onset_s`, cuts as many evidence intervals as the remainder holds (up to
/// the model's t) and decides.
EpochDecision decide(const ModelBundle& model, const TrialMatrix& raw_trial, double onset_s,
                     const InterLevelPrior& prior, const DecisionPolicy& policy);

}  // namespace hcsp
