#include "hcsp/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hcsp/error.hpp"
#include "hcsp/parallel.hpp"

namespace hcsp {

using nlohmann::json;

int ConfusionMatrix::total() const noexcept {
    int s = 0;
    for (const auto& row : counts) {
        for (int v : row) s += v;
    }
    return s;
}

int ConfusionMatrix::row_sum(int true_leaf) const noexcept {
    int s = 0;
    for (int v : counts[static_cast<std::size_t>(true_leaf)]) s += v;
    return s;
}

std::vector<std::size_t> fold_training_indices(std::size_t n_trials, std::size_t held_out) {
    std::vector<std::size_t> out;
    out.reserve(n_trials);
    for (std::size_t i = 0; i < n_trials; ++i) {
        if (i != held_out) out.push_back(i);
    }
    return out;
}

ModelBundle train_fold(const EvidenceCache& cache, std::size_t held_out, const TrainConfig& cfg) {
    const auto training = fold_training_indices(cache.size(), held_out);
    return train_model(cache, training, cfg);
}

LoocvResult loocv(const EvidenceCache& cache, const RunOptions& opts) {
    const std::size_t n = cache.size();
    std::array<int, kNumGestures> counts{};
    for (const auto& g : cache.labels) ++counts[static_cast<std::size_t>(g.leaf_index())];
    for (int leaf = 0; leaf < kNumGestures; ++leaf) {
        if (counts[leaf] < 2) {
            fail(ErrorKind::Parameter, "leave-one-out needs at least 2 trials of every gesture; " +
                                           GestureClass::from_leaf_index(leaf).to_string() + " has " +
                                           std::to_string(counts[leaf]));
        }
    }
    if (cache.min_intervals() < opts.train.t_intervals) {
        fail(ErrorKind::Parameter, "trials hold " + std::to_string(cache.min_intervals()) +
                                       " evidence intervals, run needs " + std::to_string(opts.train.t_intervals));
    }
    opts.prior.validate();

    LoocvResult result;
    result.decisions.resize(n);
    parallel_for(n, opts.workers, [&](std::size_t held_out) {
        const ModelBundle model = train_fold(cache, held_out, opts.train);
        result.decisions[held_out] = decide(model, cache.windows[held_out], opts.prior, opts.policy);
    });

    AccuracyReport& r = result.report;
    r.n_trials = static_cast<int>(n);
    std::array<int, kNumGestures> correct{};
    int total_correct = 0;
    double intervals = 0.0;
    int met = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const int truth = cache.labels[i].leaf_index();
        const int decided = result.decisions[i].gesture.leaf_index();
        ++result.confusion.counts[truth][decided];
        ++r.per_gesture_trials[truth];
        if (truth == decided) {
            ++correct[truth];
            ++total_correct;
        }
        intervals += result.decisions[i].intervals_used;
        met += result.decisions[i].threshold_met ? 1 : 0;
    }
    r.accuracy = static_cast<double>(total_correct) / static_cast<double>(n);
    for (int leaf = 0; leaf < kNumGestures; ++leaf) {
        r.per_gesture_accuracy[leaf] = r.per_gesture_trials[leaf] > 0
                                           ? static_cast<double>(correct[leaf]) / r.per_gesture_trials[leaf]
                                           : std::numeric_limits<double>::quiet_NaN();
    }
    r.mean_intervals_used = intervals / static_cast<double>(n);
    r.threshold_met_fraction = static_cast<double>(met) / static_cast<double>(n);
    r.k = opts.train.k;
    r.t_intervals = opts.train.t_intervals;
    r.threshold = opts.policy.threshold;
    r.max_intervals = opts.policy.max_intervals;
    r.topology = opts.train.topology;
    r.evidence_mode = opts.train.evidence_mode;
    r.lda_mode = opts.train.lda_mode;
    return result;
}

LoocvResult loocv(const Dataset& ds, const RunOptions& opts) {
    if (ds.size() == 0) fail(ErrorKind::Parameter, "leave-one-out on an empty dataset");
    const auto cache =
        build_evidence_cache(ds, opts.preprocess, opts.train.evidence_mode, opts.train.t_intervals, opts.workers);
    return loocv(cache, opts);
}

const SurfaceCell& AccuracySurface::at(int feature_count, int t_intervals) const {
    for (const auto& c : cells) {
        if (c.feature_count == feature_count && c.t_intervals == t_intervals) return c;
    }
    fail(ErrorKind::Parameter, "no grid cell (" + std::to_string(feature_count) + ", " + std::to_string(t_intervals) + ")");
}

std::vector<int> default_feature_counts(std::size_t channels) {
    std::vector<int> out;
    const int top = std::min<int>(static_cast<int>(channels), 12);
    for (int f = 2; f <= top; f += 2) out.push_back(f);
    return out;
}

AccuracySurface grid_search(const Dataset& ds, std::span<const int> feature_counts,
                            std::span<const int> window_lengths, const RunOptions& base) {
    AccuracySurface surface;
    surface.feature_counts.assign(feature_counts.begin(), feature_counts.end());
    surface.window_lengths.assign(window_lengths.begin(), window_lengths.end());
    if (ds.size() == 0) fail(ErrorKind::Parameter, "grid search on an empty dataset");

    int max_t = 1;
    for (int t : window_lengths) max_t = std::max(max_t, t);
    const auto cache = build_evidence_cache(ds, base.preprocess, base.train.evidence_mode, max_t, base.workers);
    const int available = cache.min_intervals();
    const auto m = static_cast<int>(ds.channels());

    for (int fc : feature_counts) {
        for (int t : window_lengths) {
            SurfaceCell cell{fc, t, std::nullopt, {}};
            if (fc < 2 || fc % 2 != 0) {
                cell.skipped_reason = "feature count must be a positive even number";
            } else if (fc > m) {
                cell.skipped_reason = "feature count " + std::to_string(fc) + " exceeds channel count " + std::to_string(m);
            } else if (t < 1 || t > available) {
                cell.skipped_reason = "window length " + std::to_string(t) + " s exceeds the " +
                                      std::to_string(available) + " s available in every trial";
            } else {
                RunOptions opts = base;
                opts.train.k = fc / 2;
                opts.train.t_intervals = t;
                try {
                    cell.result = loocv(cache, opts);
                } catch (const Error& e) {
                    cell.skipped_reason = e.what();
                }
            }
            surface.cells.push_back(std::move(cell));
        }
    }
    return surface;
}

BlockStats confusion_block_stats(const ConfusionMatrix& cm) {
    BlockStats s;
    const int total = cm.total();
    if (total == 0) return s;
    for (int a = 0; a < kNumGestures; ++a) {
        const auto ga = GestureClass::from_leaf_index(a);
        for (int b = 0; b < kNumGestures; ++b) {
            const auto gb = GestureClass::from_leaf_index(b);
            const double v = cm.counts[a][b];
            if (ga.hand != gb.hand) {
                s.cross_hand += v;
            } else if (ga.fingers != gb.fingers) {
                s.cross_fingers += v;
            } else if (ga.thumb != gb.thumb) {
                s.cross_thumb += v;
            }
        }
    }
    s.cross_hand /= total;
    s.cross_fingers /= total;
    s.cross_thumb /= total;
    return s;
}

// --- reports ---------------------------------------------------------------

namespace {

json gesture_json(const GestureClass& g) {
    return {{"hand", to_string(g.hand)},
            {"fingers", to_string(g.fingers)},
            {"thumb", to_string(g.thumb)},
            {"leaf_index", g.leaf_index()}};
}

}  // namespace

json decision_json(const EpochDecision& d, std::size_t epoch) {
    return {{"epoch", epoch},
            {"gesture", gesture_json(d.gesture)},
            {"pmf", d.pmf.p},
            {"intervals_used", d.intervals_used},
            {"threshold_met", d.threshold_met}};
}

json report_json(const AccuracyReport& r) {
    json per = json::array();
    for (double v : r.per_gesture_accuracy) per.push_back(std::isnan(v) ? json(nullptr) : json(v));
    return {{"accuracy", r.accuracy},
            {"per_gesture_accuracy", per},
            {"per_gesture_trials", r.per_gesture_trials},
            {"n_trials", r.n_trials},
            {"mean_intervals_used", r.mean_intervals_used},
            {"threshold_met_fraction", r.threshold_met_fraction},
            {"config",
             {{"k", r.k},
              {"feature_count", 2 * r.k},
              {"t", r.t_intervals},
              {"threshold", r.threshold},
              {"N", r.max_intervals},
              {"classifier_topology", to_string(r.topology)},
              {"evidence_mode", to_string(r.evidence_mode)},
              {"lda_mode", to_string(r.lda_mode)}}}};
}

json confusion_json(const ConfusionMatrix& cm) {
    const BlockStats b = confusion_block_stats(cm);
    return {{"counts", cm.counts},
            {"block_stats",
             {{"cross_hand", b.cross_hand}, {"cross_fingers", b.cross_fingers}, {"cross_thumb", b.cross_thumb}}}};
}

std::string confusion_csv(const ConfusionMatrix& cm) {
    std::ostringstream os;
    os << "true\\decided";
    for (int b = 0; b < kNumGestures; ++b) os << ',' << GestureClass::from_leaf_index(b).to_string();
    os << '\n';
    for (int a = 0; a < kNumGestures; ++a) {
        os << GestureClass::from_leaf_index(a).to_string();
        for (int b = 0; b < kNumGestures; ++b) os << ',' << cm.counts[a][b];
        os << '\n';
    }
    return os.str();
}

json surface_json(const AccuracySurface& s) {
    json cells = json::array();
    for (const auto& c : s.cells) {
        json jc = {{"feature_count", c.feature_count}, {"t", c.t_intervals}};
        if (c.result) {
            jc["report"] = report_json(c.result->report);
            jc["confusion"] = confusion_json(c.result->confusion);
        } else {
            jc["skipped"] = c.skipped_reason;
        }
        cells.push_back(std::move(jc));
    }
    return {{"feature_counts", s.feature_counts}, {"window_lengths", s.window_lengths}, {"cells", cells}};
}

std::string surface_csv(const AccuracySurface& s) {
    std::ostringstream os;
    os << "feature_count";
    for (int t : s.window_lengths) os << ",t=" << t;
    os << '\n' << std::setprecision(6);
    for (int fc : s.feature_counts) {
        os << fc;
        for (int t : s.window_lengths) {
            os << ',';
            const auto& c = s.at(fc, t);
            if (c.result) os << c.result->report.accuracy;
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace hcsp
