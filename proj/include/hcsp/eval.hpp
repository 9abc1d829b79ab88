#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hcsp/dataio.hpp"
#include "hcsp/fusion.hpp"
#include "hcsp/model.hpp"

namespace hcsp {

/// Everything a LOOCV run needs besides the data.
struct RunOptions {
    PreprocessConfig preprocess;
    TrainConfig train;
    InterLevelPrior prior;
    DecisionPolicy policy;
    int workers = 1;
};

struct ConfusionMatrix {
    std::array<std::array<int, kNumGestures>, kNumGestures> counts{};  // [true][decided]

    int total() const noexcept;
    int row_sum(int true_leaf) const noexcept;
};

struct AccuracyReport {
    double accuracy = 0.0;
    std::array<double, kNumGestures> per_gesture_accuracy{};  // NaN for absent gestures
    std::array<int, kNumGestures> per_gesture_trials{};
    int n_trials = 0;
    double mean_intervals_used = 0.0;
    double threshold_met_fraction = 0.0;
    // config echo
    int k = 0;
    int t_intervals = 0;
    double threshold = 0.0;
    int max_intervals = 0;
    Topology topology = Topology::Pooled;
    EvidenceMode evidence_mode = EvidenceMode::Subwindows;
    LdaMode lda_mode = LdaMode::PerComponent;
};

struct LoocvResult {
    AccuracyReport report;
    ConfusionMatrix confusion;
    std::vector<EpochDecision> decisions;  // one per trial, dataset order
};

/// Trials used to train the fold that holds out `held_out`.
std::vector<std::size_t> fold_training_indices(std::size_t n_trials, std::size_t held_out);

/// Model of one LOOCV fold; the held-out trial contributes nothing to it.
ModelBundle train_fold(const EvidenceCache& cache, std::size_t held_out, const TrainConfig& cfg);

/// Leave-one-trial-out evaluation with the full sequential decision policy.
LoocvResult loocv(const EvidenceCache& cache, const RunOptions& opts);
LoocvResult loocv(const Dataset& ds, const RunOptions& opts);

struct SurfaceCell {
    int feature_count = 0;  // 2k
    int t_intervals = 0;
    std::optional<LoocvResult> result;
    std::string skipped_reason;
};

struct AccuracySurface {
    std::vector<int> feature_counts;
    std::vector<int> window_lengths;
    std::vector<SurfaceCell> cells;  // feature-count major

    const SurfaceCell& at(int feature_count, int t_intervals) const;
};

/// Default sweep: 2k in {2, 4, ..., min(m, 12)}.
std::vector<int> default_feature_counts(std::size_t channels);

/// One LOOCV per (2k, t) cell; infeasible cells are marked skipped.
AccuracySurface grid_search(const Dataset& ds, std::span<const int> feature_counts,
                            std::span<const int> window_lengths, const RunOptions& base);

/// Confusion mass that crosses each level of the hierarchy, as a fraction
/// of all trials: cross_hand counts decisions on the wrong hand;
/// cross_fingers the right hand but wrong finger state; cross_thumb the right
/// hand and fingers but wrong thumb. The three sum to the error rate.
struct BlockStats {
    double cross_hand = 0.0;
    double cross_fingers = 0.0;
    double cross_thumb = 0.0;
};
BlockStats confusion_block_stats(const ConfusionMatrix& cm);

nlohmann::json decision_json(const EpochDecision& d, std::size_t epoch);
nlohmann::json report_json(const AccuracyReport& r);
nlohmann::json confusion_json(const ConfusionMatrix& cm);
std::string confusion_csv(const ConfusionMatrix& cm);
nlohmann::json surface_json(const AccuracySurface& s);
/// Rows are feature counts, columns window lengths; skipped cells are empty.
std::string surface_csv(const AccuracySurface& s);

}  // namespace hcsp
