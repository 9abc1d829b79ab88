// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hcsp/csp.hpp"
#include "hcsp/eval.hpp"
#include "hcsp/fusion.hpp"
#include "hcsp/synthgen.hpp"
#include "test_support.hpp"

using namespace hcsp;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

int workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

double max_offdiag(const MatrixXd& a) {
    MatrixXd o = a;
    o.diagonal().setZero();
    return o.cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------

Outcome csp_constraints() {
    std::mt19937_64 rng(20240601);
    const auto t0 = Clock::now();
    double worst_comp = 0.0, worst_off = 0.0;
    bool ordered = true;
    const Eigen::Index sizes[] = {4, 8, 16};
    for (int i = 0; i < 200; ++i) {
        const Eigen::Index m = sizes[i % 3];
        const auto neg = test::random_spd(m, rng);
        const auto pos = test::random_spd(m, rng);
        const auto f = solve_csp(neg, pos, 1);
        worst_comp = std::max(worst_comp,
                              (f.V.transpose() * (neg.values + pos.values) * f.V - MatrixXd::Identity(m, m))
                                  .cwiseAbs()
                                  .maxCoeff());
        worst_off = std::max(worst_off, max_offdiag(f.V.transpose() * neg.values * f.V));
        for (Eigen::Index j = 0; j < m; ++j) {
            if (f.D(j) < 0.0 || f.D(j) > 1.0) ordered = false;
            if (j + 1 < m && f.D(j) < f.D(j + 1)) ordered = false;
        }
    }
    const double secs = seconds_since(t0);
    return {worst_comp < 1e-8 && worst_off < 1e-8 && ordered && secs < 10.0,
            fmt("200 pairs, max |V'(S-+S+)V - I| = %.2e, max offdiag V'S-V = %.2e, D ordered in [0,1]: %s, %.2f s",
                worst_comp, worst_off, ordered ? "yes" : "no", secs)};
}

Outcome rayleigh_optimality() {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    double worst_excess = -std::numeric_limits<double>::infinity();
    for (int pair = 0; pair < 20; ++pair) {
        const auto neg = test::random_spd(8, rng);
        const auto pos = test::random_spd(8, rng);
        const double top = solve_csp(neg, pos).D(0);
        const MatrixXd comp = neg.values + pos.values;
        VectorXd v(8);
        for (int s = 0; s < 100000; ++s) {
            for (auto& x : v) x = g(rng);
            const double q = v.dot(neg.values * v) / v.dot(comp * v);
            worst_excess = std::max(worst_excess, q - top);
        }
    }
    return {worst_excess <= 1e-6,
            fmt("20 pairs x 1e5 directions, max(quotient - max D) = %.2e", worst_excess)};
}

Outcome feature_identity() {
    std::mt19937_64 rng(11);
    double worst_sum = 0.0, worst_scale = 0.0;
    for (int i = 0; i < 100; ++i) {
        const int k = 1 + i % 4;
        const auto f = solve_csp(test::random_spd(8, rng), test::random_spd(8, rng), k);
        const MatrixXd P = project(f, test::random_matrix(8, 256, rng), k);
        const VectorXd feat = csp_features(P);
        worst_sum = std::max(worst_sum, std::abs(feat.array().exp().sum() - 1.0));
        for (double c : {1e-3, 1.0, 1e3}) {
            worst_scale = std::max(worst_scale, (csp_features(c * P) - feat).cwiseAbs().maxCoeff());
        }
    }
    return {worst_sum <= 1e-10 && worst_scale <= 1e-10,
            fmt("100 projections, max |sum exp(f) - 1| = %.2e, max scale drift = %.2e", worst_sum, worst_scale)};
}

// Brute force over the eight joint configurations.
std::array<double, 8> enumerate(const LevelLogLik (&l)[3], const InterLevelPrior& p) {
    std::array<double, 8> logm{};
    double shift = -std::numeric_limits<double>::infinity();
    for (int h = 0; h < 2; ++h)
        for (int f = 0; f < 2; ++f)
            for (int t = 0; t < 2; ++t) {
                const double ll = (h ? l[0].pos : l[0].neg) + (f ? l[1].pos : l[1].neg) + (t ? l[2].pos : l[2].neg);
                logm[4 * h + 2 * f + t] = ll;
                shift = std::max(shift, ll);
            }
    std::array<double, 8> out{};
    double total = 0.0;
    for (int h = 0; h < 2; ++h)
        for (int f = 0; f < 2; ++f)
            for (int t = 0; t < 2; ++t) {
                const int s = 4 * h + 2 * f + t;
                out[s] = std::exp(logm[s] - shift) * p.p_L1[h] * p.p_L2_given_L1[h][f] * p.p_L3_given_L2[f][t];
                total += out[s];
            }
    for (auto& v : out) v /= total;
    return out;
}

Outcome posterior_oracle() {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> g(0.0, 20.0);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    double worst = 0.0, worst_sum = 0.0;
    bool gated = true;
    for (int i = 0; i < 1000; ++i) {
        LevelLogLik l[3] = {{g(rng), g(rng)}, {g(rng), g(rng)}, {g(rng), g(rng)}};
        InterLevelPrior p;
        const double a = u(rng);
        p.p_L1 = {a, 1 - a};
        for (auto& r : p.p_L2_given_L1) {
            const double b = u(rng);
            r = {b, 1 - b};
        }
        for (auto& r : p.p_L3_given_L2) {
            const double c = u(rng);
            r = {c, 1 - c};
        }
        const auto pmf = posterior(l[0], l[1], l[2], p);
        const auto want = enumerate(l, p);
        double s = 0.0;
        for (int k = 0; k < 8; ++k) {
            worst = std::max(worst, std::abs(pmf.p[k] - want[k]));
            s += pmf.p[k];
        }
        worst_sum = std::max(worst_sum, std::abs(s - 1.0));

        // Zero P(adduction | fingers) in both rows: the four adduction leaves vanish.
        InterLevelPrior gate = p;
        gate.p_L3_given_L2 = {{{1.0, 0.0}, {1.0, 0.0}}};
        const auto gp = posterior(l[0], l[1], l[2], gate);
        for (int k = 1; k < 8; k += 2) gated = gated && gp.p[k] == 0.0;
        // Zero P(right hand): the four right-hand leaves vanish.
        InterLevelPrior left_only = p;
        left_only.p_L1 = {1.0, 0.0};
        const auto lp = posterior(l[0], l[1], l[2], left_only);
        for (int k = 4; k < 8; ++k) gated = gated && lp.p[k] == 0.0;
    }
    return {worst <= 1e-12 && worst_sum <= 1e-12 && gated,
            fmt("1000 draws, max |posterior - enumeration| = %.2e, max |sum - 1| = %.2e, gating exact: %s", worst,
                worst_sum, gated ? "yes" : "no")};
}

// ---------------------------------------------------------------------------

SynthConfig full_size(double snr, std::uint64_t seed) {
    SynthConfig cfg;
    cfg.m = 16;
    cfg.sample_rate_hz = 256;
    cfg.trials_per_gesture = 20;
    cfg.snr = snr;
    cfg.seed = seed;
    return cfg;
}

RunOptions operating_point() {
    RunOptions o;
    o.train.k = 3;
    o.train.t_intervals = 5;
    o.policy = {0.9, 5};
    o.prior = InterLevelPrior::uniform();
    o.workers = workers();
    return o;
}

struct SeedRun {
    std::uint64_t seed;
    Dataset ds;
    LoocvResult at_operating_point;
    double seconds;
};

std::vector<SeedRun>& snr1_runs() {
    static std::vector<SeedRun> runs = [] {
        std::vector<SeedRun> out;
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            const auto t0 = Clock::now();
            const auto cfg = full_size(1.0, seed);
            SeedRun r{seed, generate(build_model(cfg), cfg), {}, 0.0};
            r.at_operating_point = loocv(r.ds, operating_point());
            r.seconds = seconds_since(t0);
            out.push_back(std::move(r));
        }
        return out;
    }();
    return runs;
}

Outcome synthetic_recovery() {
    bool ok = true;
    std::ostringstream os;
    os << "2k=6, t=5:";
    for (const auto& r : snr1_runs()) {
        const double acc = r.at_operating_point.report.accuracy;
        ok = ok && acc >= 0.90 && r.seconds < 300.0;
        os << fmt(" seed %llu acc %.4f (%.1f s);", static_cast<unsigned long long>(r.seed), acc, r.seconds);
    }
    return {ok, os.str()};
}

// Central 95% acceptance region of Binomial(n, p): [q(0.025), q(0.975)] with
// q(a) the smallest count whose CDF reaches a.
std::pair<int, int> binomial_interval(int n, double p) {
    std::vector<double> pmf(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) {
        const double logc = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
        pmf[k] = std::exp(logc + k * std::log(p) + (n - k) * std::log1p(-p));
    }
    int lo = -1, hi = -1;
    double cdf = 0.0;
    for (int k = 0; k <= n; ++k) {
        cdf += pmf[k];
        if (lo < 0 && cdf >= 0.025) lo = k;
        if (hi < 0 && cdf >= 0.975) hi = k;
    }
    return {lo, hi};
}

Outcome chance_level() {
    const auto [lo, hi] = binomial_interval(160, 0.125);
    bool ok = true;
    std::ostringstream os;
    os << fmt("95%% interval %d..%d of 160 ([%.4f, %.4f]):", lo, hi, lo / 160.0, hi / 160.0);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto cfg = full_size(0.0, seed);
        const auto r = loocv(generate(build_model(cfg), cfg), operating_point());
        const int correct = static_cast<int>(std::lround(r.report.accuracy * 160));
        ok = ok && correct >= lo && correct <= hi;
        os << fmt(" seed %llu %d/160 = %.4f;", static_cast<unsigned long long>(seed), correct, r.report.accuracy);
    }
    return {ok, os.str()};
}

Outcome evidence_trend() {
    const std::vector<int> fcs{2, 4, 6}, ts{1, 5};
    std::array<std::array<double, 2>, 3> mean{};
    for (const auto& r : snr1_runs()) {
        const auto s = grid_search(r.ds, fcs, ts, operating_point());
        for (std::size_t i = 0; i < fcs.size(); ++i) {
            for (std::size_t j = 0; j < ts.size(); ++j) {
                const auto& c = s.at(fcs[i], ts[j]);
                if (!c.result) return {false, "cell skipped: " + c.skipped_reason};
                mean[i][j] += c.result->report.accuracy / 3.0;
            }
        }
    }
    bool ok = true;
    std::ostringstream os;
    os << "mean over 3 seeds, t=1 -> t=5:";
    for (std::size_t i = 0; i < fcs.size(); ++i) {
        ok = ok && mean[i][1] > mean[i][0];
        os << fmt(" 2k=%d %.4f -> %.4f;", fcs[i], mean[i][0], mean[i][1]);
    }
    return {ok, os.str()};
}

Outcome block_structure() {
    bool ok = true;
    std::ostringstream os;
    for (const auto& r : snr1_runs()) {
        const auto b = confusion_block_stats(r.at_operating_point.confusion);
        const bool seed_ok = b.cross_hand < 0.05 && b.cross_thumb > b.cross_hand && b.cross_thumb > b.cross_fingers;
        ok = ok && seed_ok;
        os << fmt(" seed %llu hand %.4f fingers %.4f thumb %.4f;", static_cast<unsigned long long>(r.seed),
                  b.cross_hand, b.cross_fingers, b.cross_thumb);
    }
    return {ok, "cross-level confusion fractions:" + os.str()};
}

// ---------------------------------------------------------------------------

GesturePMF random_pmf(std::mt19937_64& rng) {
    std::gamma_distribution<double> gam(0.4, 1.0);
    GesturePMF p;
    double s = 0.0;
    for (auto& v : p.p) s += v = gam(rng) + 1e-12;
    for (auto& v : p.p) v /= s;
    return p;
}

bool same(const EpochDecision& a, const EpochDecision& b) {
    return a.gesture == b.gesture && a.intervals_used == b.intervals_used && a.threshold_met == b.threshold_met &&
           a.pmf.p == b.pmf.p;
}

Outcome decision_properties() {
    std::mt19937_64 rng(17);
    const std::vector<double> thresholds{1.0, 0.99, 0.95, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.0};
    int nondeterministic = 0, non_monotone = 0, bad_fallback = 0, fallbacks = 0;
    for (int s = 0; s < 500; ++s) {
        std::vector<GesturePMF> stream;
        for (int t = 0; t < 5; ++t) stream.push_back(random_pmf(rng));

        int prev = std::numeric_limits<int>::max();
        for (double th : thresholds) {
            const auto a = decide_from_posteriors(stream, th);
            const auto b = decide_from_posteriors(stream, th);
            if (!same(a, b)) ++nondeterministic;
            if (a.intervals_used > prev) ++non_monotone;
            prev = a.intervals_used;

            // Independent fallback oracle.
            bool crossed = false;
            for (const auto& p : stream) crossed = crossed || *std::max_element(p.p.begin(), p.p.end()) >= th;
            if (!crossed) {
                ++fallbacks;
                std::size_t best = 0;
                double best_max = -1.0;
                for (std::size_t t = 0; t < stream.size(); ++t) {
                    const double m = *std::max_element(stream[t].p.begin(), stream[t].p.end());
                    if (m > best_max) {
                        best_max = m;
                        best = t;
                    }
                }
                const auto& p = stream[best].p;
                const int leaf = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
                if (a.threshold_met || a.intervals_used != static_cast<int>(best) + 1 ||
                    a.gesture.leaf_index() != leaf) {
                    ++bad_fallback;
                }
            }
        }
    }
    return {nondeterministic == 0 && non_monotone == 0 && bad_fallback == 0 && fallbacks > 0,
            fmt("500 streams x 13 thresholds: %d nondeterministic, %d monotonicity violations, %d/%d bad fallbacks",
                nondeterministic, non_monotone, bad_fallback, fallbacks)};
}

Outcome leakage_canary() {
    SynthConfig cfg = full_size(1.0, 5);
    cfg.trials_per_gesture = 2;
    const Dataset ds = generate(build_model(cfg), cfg);
    RunOptions o = operating_point();
    o.train.k = 2;
    const auto cache = build_evidence_cache(ds, o.preprocess, o.train.evidence_mode, o.train.t_intervals);
    const auto fingerprint = [](const ModelBundle& m) { return model_to_json(m).dump(); };

    int referenced = 0, blind = 0, structural = 0;
    std::mt19937_64 rng(23);
    for (std::size_t h = 0; h < cache.size(); ++h) {
        const auto idx = fold_training_indices(cache.size(), h);
        if (idx.size() != cache.size() - 1 || std::find(idx.begin(), idx.end(), h) != idx.end()) ++structural;

        const std::string base = fingerprint(train_fold(cache, h, o.train));

        EvidenceCache scrambled = cache;
        for (auto& w : scrambled.windows[h]) w = window_stats(test::random_matrix(16, 256, rng) * 5.0);
        scrambled.labels[h] = GestureClass::from_leaf_index(static_cast<int>((cache.labels[h].leaf_index() + 1) % 8));
        if (fingerprint(train_fold(scrambled, h, o.train)) != base) ++referenced;

        EvidenceCache injected = cache;
        injected.labels.push_back(cache.labels[h]);
        injected.windows.push_back(cache.windows[h]);
        if (fingerprint(train_fold(injected, h, o.train)) == base) ++blind;
    }
    return {referenced == 0 && blind == 0 && structural == 0,
            fmt("16-trial dataset: %d folds depend on held-out data, %d folds unchanged by injection, %d bad index sets",
                referenced, blind, structural)};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "CSP constraint suite", csp_constraints},
        {2, "Rayleigh optimality", rayleigh_optimality},
        {3, "Feature identity and scale invariance", feature_identity},
        {4, "Posterior oracle", posterior_oracle},
        {5, "Synthetic recovery (snr=1)", synthetic_recovery},
        {6, "Chance level (snr=0)", chance_level},
        {7, "Accuracy grows with evidence length", evidence_trend},
        {8, "Confusion block structure", block_structure},
        {9, "Decision policy properties", decision_properties},
        {10, "No-leakage canary", leakage_canary},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        Outcome out;
        const auto t0 = Clock::now();
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out = {false, std::string("threw: ") + e.what()};
        }
        failed += out.pass ? 0 : 1;
        std::cout << (out.pass ? "PASS" : "FAIL") << "  [" << c.id << "] " << c.name << " -- " << out.detail
                  << fmt(" [%.1f s]", seconds_since(t0)) << std::endl;
    }
    std::cout << (failed == 0 ? "all acceptance criteria passed" : std::to_string(failed) + " criteria failed")
              << std::endl;
    return failed == 0 ? 0 : 1;
}
