#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hcsp/csp.hpp"
#include "hcsp/dataio.hpp"
#include "hcsp/hierarchy.hpp"
#include "hcsp/preprocess.hpp"
#include "hcsp/scoring.hpp"

namespace hcsp {

enum class Topology { Pooled, PerBranch };

struct PreprocessConfig {
    double low_hz = 3.0;
    double high_hz = 30.0;
    int num_taps = 0;  // 0 selects default_num_taps(sample rate)

    FilterKernel kernel(double sample_rate_hz) const;
};

struct TrainConfig {
    int k = 3;            // filters per side; 2k features
    int t_intervals = 5;  // evidence intervals per trial
    EvidenceMode evidence_mode = EvidenceMode::Subwindows;
    Topology topology = Topology::Pooled;
    LdaMode lda_mode = LdaMode::PerComponent;
};

/// Statistics of one evidence window; everything training and scoring need.
struct WindowStats {
    CovMatrix normalized;       // EE' / trace(EE')
    Eigen::MatrixXd centered;   // mean-removed covariance, for projected variances
};

WindowStats window_stats(const Eigen::Ref<const Eigen::MatrixXd>& window);

/// Filtered, segmented evidence for every trial of a dataset.
///
/// windows[i] holds the per-interval statistics of trial i: 1 s sub-windows
/// in Subwindows mode, or windows of length 1..n s in Growing mode.
struct EvidenceCache {
    EvidenceMode mode = EvidenceMode::Subwindows;
    std::vector<GestureClass> labels;
    std::vector<std::vector<WindowStats>> windows;

    std::size_t size() const noexcept { return labels.size(); }
    /// Intervals available in every trial.
    int min_intervals() const;
};

/// Band-pass the whole trial, then cut its motor-imagery segment.
TrialMatrix preprocess_trial(const Trial& trial, const FilterKernel& kernel);

EvidenceCache build_evidence_cache(const Dataset& ds, const PreprocessConfig& pre, EvidenceMode mode,
                                   int max_intervals, int workers = 1);

/// Spatial filter, Fisher weights and category densities for one split.
struct LevelClassifier {
    Level level = Level::Hand;
    CategoryScope scope;
    SpatialFilter filter;
    FisherWeights weights;
    GaussianDensity neg;
    GaussianDensity pos;

    Eigen::VectorXd features(const WindowStats& w) const;
    /// (log P(window | l = -1), log P(window | l = +1)).
    std::pair<double, double> window_log_likelihoods(const WindowStats& w) const;
};

struct ModelBundle {
    static constexpr int kFormatVersion = 1;

    double sample_rate_hz = 0.0;
    std::vector<std::string> channel_names;
    PreprocessConfig preprocess;
    TrainConfig train;
    std::vector<LevelClassifier> classifiers;

    /// The classifier that scores `leaf` at `level` (the pooled one, or the
    /// branch matching the leaf's higher levels).
    const LevelClassifier& classifier_for(Level level, const GestureClass& leaf) const;
};

/// Fits one classifier on the given trials of the cache.
LevelClassifier train_level(const EvidenceCache& cache, std::span<const std::size_t> trials, Level level,
                            const CategoryScope& scope, const TrainConfig& cfg);

/// Fits every classifier of the configured topology on `trials` only.
ModelBundle train_model(const EvidenceCache& cache, std::span<const std::size_t> trials, const TrainConfig& cfg);

nlohmann::json model_to_json(const ModelBundle& model);
ModelBundle model_from_json(const nlohmann::json& j);
void save_model(const ModelBundle& model, const std::filesystem::path& path);
ModelBundle load_model(const std::filesystem::path& path);

const char* to_string(Topology t);
const char* to_string(EvidenceMode m);
const char* to_string(LdaMode m);

}  // namespace hcsp
