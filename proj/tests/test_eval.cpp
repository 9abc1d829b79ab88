#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hcsp/error.hpp"
#include "hcsp/eval.hpp"
#include "hcsp/synthgen.hpp"
#include "test_support.hpp"

using namespace hcsp;

namespace {

Dataset small_synthetic(int per_gesture, double snr, std::uint64_t seed) {
    SynthConfig cfg;
    cfg.m = 8;
    cfg.sample_rate_hz = 128;
    cfg.trials_per_gesture = per_gesture;
    cfg.imagery_s = 3.0;
    cfg.snr = snr;
    cfg.seed = seed;
    return generate(build_model(cfg), cfg);
}

RunOptions small_options() {
    RunOptions o;
    o.train.k = 2;
    o.train.t_intervals = 3;
    o.policy.max_intervals = 3;
    return o;
}

std::string fingerprint(const ModelBundle& m) { return model_to_json(m).dump(); }

}  // namespace

TEST_CASE("confusion block stats") {
    ConfusionMatrix diag;
    for (int i = 0; i < 8; ++i) diag.counts[i][i] = 20;
    const auto d = confusion_block_stats(diag);
    CHECK(d.cross_hand == 0.0);
    CHECK(d.cross_fingers == 0.0);
    CHECK(d.cross_thumb == 0.0);

    ConfusionMatrix uniform;
    for (auto& row : uniform.counts) row.fill(5);
    const auto u = confusion_block_stats(uniform);
    CHECK(u.cross_hand == doctest::Approx(0.5));
    CHECK(u.cross_fingers == doctest::Approx(0.25));
    CHECK(u.cross_thumb == doctest::Approx(0.125));

    // Hand-built: one trial of each kind of error out of 10.
    ConfusionMatrix cm;
    cm.counts[0][0] = 7;
    cm.counts[0][4] = 1;  // wrong hand
    cm.counts[0][2] = 1;  // same hand, wrong fingers
    cm.counts[0][1] = 1;  // same hand and fingers, wrong thumb
    const auto b = confusion_block_stats(cm);
    CHECK(b.cross_hand == doctest::Approx(0.1));
    CHECK(b.cross_fingers == doctest::Approx(0.1));
    CHECK(b.cross_thumb == doctest::Approx(0.1));
    CHECK(confusion_block_stats(ConfusionMatrix{}).cross_hand == 0.0);
}

TEST_CASE("fold training indices exclude exactly the held-out trial") {
    for (std::size_t n : {2u, 16u, 160u}) {
        for (std::size_t h = 0; h < n; h += 7) {
            const auto idx = fold_training_indices(n, h);
            CHECK(idx.size() == n - 1);
            CHECK(std::find(idx.begin(), idx.end(), h) == idx.end());
            CHECK(std::is_sorted(idx.begin(), idx.end()));
        }
    }
}

TEST_CASE("loocv report bookkeeping") {
    const auto ds = small_synthetic(4, 1.0, 3);
    const auto r = loocv(ds, small_options());
    CHECK(r.report.n_trials == 32);
    CHECK(r.decisions.size() == 32);
    CHECK(r.confusion.total() == 32);
    for (int leaf = 0; leaf < 8; ++leaf) {
        CHECK(r.confusion.row_sum(leaf) == 4);
        CHECK(r.report.per_gesture_trials[leaf] == 4);
    }
    double weighted = 0.0;
    int correct = 0;
    for (int leaf = 0; leaf < 8; ++leaf) {
        weighted += r.report.per_gesture_accuracy[leaf] * 4 / 32.0;
        correct += r.confusion.counts[leaf][leaf];
    }
    CHECK(weighted == doctest::Approx(r.report.accuracy).epsilon(1e-14));
    CHECK(r.report.accuracy == static_cast<double>(correct) / 32.0);
    for (const auto& d : r.decisions) {
        CHECK(d.intervals_used >= 1);
        CHECK(d.intervals_used <= 3);
        CHECK(d.gesture.leaf_index() == d.pmf.argmax());
    }
    CHECK(r.report.k == 2);
    CHECK(r.report.t_intervals == 3);
}

TEST_CASE("loocv rejects unusable datasets") {
    auto kind = [](const Dataset& ds, const RunOptions& o) {
        try {
            loocv(ds, o);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::Config;
    };
    auto one_each = small_synthetic(2, 1.0, 1);
    one_each.trials.erase(one_each.trials.begin() + 8);  // leaf 0 now has one trial
    CHECK(kind(one_each, small_options()) == ErrorKind::Parameter);
    CHECK(kind(Dataset{}, small_options()) == ErrorKind::Parameter);
    RunOptions too_long = small_options();
    too_long.train.t_intervals = 5;
    CHECK(kind(small_synthetic(2, 1.0, 1), too_long) == ErrorKind::Parameter);
}

TEST_CASE("held-out trial never reaches its fold model") {
    const auto ds = small_synthetic(2, 1.0, 5);
    const RunOptions o = small_options();
    const auto cache = build_evidence_cache(ds, o.preprocess, o.train.evidence_mode, o.train.t_intervals);
    for (std::size_t h : {0u, 5u, 15u}) {
        const std::string base = fingerprint(train_fold(cache, h, o.train));

        // Replacing the held-out evidence with noise changes nothing.
        EvidenceCache scrambled = cache;
        std::mt19937_64 rng(h);
        for (auto& w : scrambled.windows[h]) w = window_stats(test::random_matrix(8, 128, rng));
        scrambled.labels[h] = GestureClass::from_leaf_index(static_cast<int>((h + 3) % 8));
        CHECK(fingerprint(train_fold(scrambled, h, o.train)) == base);

        // Injecting a copy of the held-out trial into training does change it.
        EvidenceCache injected = cache;
        injected.labels.push_back(cache.labels[h]);
        injected.windows.push_back(cache.windows[h]);
        CHECK(fingerprint(train_fold(injected, h, o.train)) != base);
    }
}

TEST_CASE("results do not depend on the worker count") {
    const auto ds = small_synthetic(3, 0.8, 7);
    RunOptions o = small_options();
    o.workers = 1;
    const auto a = loocv(ds, o);
    o.workers = 5;
    const auto b = loocv(ds, o);
    CHECK(report_json(a.report).dump() == report_json(b.report).dump());
    CHECK(a.confusion.counts == b.confusion.counts);
    for (std::size_t i = 0; i < a.decisions.size(); ++i) {
        CHECK(decision_json(a.decisions[i], i).dump() == decision_json(b.decisions[i], i).dump());
    }
}

TEST_CASE("grid search") {
    const auto ds = small_synthetic(3, 1.0, 2);
    const RunOptions o = small_options();

    SUBCASE("singleton grid equals direct loocv") {
        const std::vector<int> fc{4}, t{3};
        const auto s = grid_search(ds, fc, t, o);
        REQUIRE(s.cells.size() == 1);
        REQUIRE(s.cells[0].result.has_value());
        const auto direct = loocv(ds, o);
        CHECK(report_json(s.cells[0].result->report).dump() == report_json(direct.report).dump());
        CHECK(s.cells[0].result->confusion.counts == direct.confusion.counts);
    }
    SUBCASE("infeasible cells are skipped with a reason") {
        const std::vector<int> fc{2, 10, 3}, t{1, 3, 4};
        const auto s = grid_search(ds, fc, t, o);
        CHECK(s.cells.size() == 9);
        CHECK(s.at(2, 1).result.has_value());
        CHECK(s.at(2, 3).result.has_value());
        CHECK_FALSE(s.at(2, 4).result.has_value());
        CHECK(s.at(2, 4).skipped_reason.find("window length") != std::string::npos);
        CHECK_FALSE(s.at(10, 1).result.has_value());
        CHECK(s.at(10, 1).skipped_reason.find("channel") != std::string::npos);
        CHECK_FALSE(s.at(3, 1).result.has_value());
        const auto csv = surface_csv(s);
        CHECK(csv.rfind("feature_count,t=1,t=3,t=4\n", 0) == 0);
        CHECK(surface_json(s)["cells"].size() == 9);
        CHECK_THROWS_AS(s.at(6, 1), Error);
    }
    SUBCASE("default feature counts") {
        CHECK(default_feature_counts(16) == std::vector<int>{2, 4, 6, 8, 10, 12});
        CHECK(default_feature_counts(8) == std::vector<int>{2, 4, 6, 8});
        CHECK(default_feature_counts(5) == std::vector<int>{2, 4});
    }
}

TEST_CASE("alternative topology, evidence and LDA modes run end to end") {
    const auto ds = small_synthetic(3, 1.5, 4);
    RunOptions o = small_options();
    o.train.topology = Topology::PerBranch;
    const auto pb = loocv(ds, o);
    CHECK(pb.report.topology == Topology::PerBranch);
    CHECK(pb.report.accuracy > 0.125);

    o = small_options();
    o.train.evidence_mode = EvidenceMode::Growing;
    const auto gr = loocv(ds, o);
    CHECK(gr.report.evidence_mode == EvidenceMode::Growing);
    CHECK(gr.report.accuracy > 0.125);

    o = small_options();
    o.train.lda_mode = LdaMode::Joint;
    const auto jt = loocv(ds, o);
    CHECK(jt.report.lda_mode == LdaMode::Joint);
    CHECK(jt.confusion.total() == 24);

    const auto cache = build_evidence_cache(ds, o.preprocess, EvidenceMode::Subwindows, 3);
    TrainConfig tc = small_options().train;
    tc.topology = Topology::PerBranch;
    CHECK(train_fold(cache, 0, tc).classifiers.size() == 7);
}

TEST_CASE("report serialization") {
    const auto ds = small_synthetic(2, 1.0, 6);
    const auto r = loocv(ds, small_options());
    const auto j = report_json(r.report);
    CHECK(j["n_trials"] == 16);
    CHECK(j["config"]["feature_count"] == 4);
    CHECK(j["config"]["evidence_mode"] == "subwindows");
    const auto c = confusion_json(r.confusion);
    CHECK(c["counts"].size() == 8);
    CHECK(c["block_stats"].contains("cross_thumb"));
    const auto csv = confusion_csv(r.confusion);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
    const auto d = decision_json(r.decisions[3], 3);
    CHECK(d["epoch"] == 3);
    CHECK(d["pmf"].size() == 8);
    CHECK(d.contains("intervals_used"));
    CHECK(d.contains("threshold_met"));
}
