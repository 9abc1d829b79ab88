#include "hcsp/synthgen.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "hcsp/error.hpp"
#include "hcsp/preprocess.hpp"

namespace hcsp {

namespace {

constexpr double kEigenFloor = 1e-6;
constexpr double kMixingStrength = 0.3;
constexpr double kMaxProjectionChange = 0.5;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent stream per (seed, purpose, index).
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index) {
    return std::mt19937_64(splitmix64(splitmix64(seed ^ splitmix64(purpose)) + index));
}

Eigen::MatrixXd clip_to_spd(const Eigen::MatrixXd& s) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(kEigenFloor);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd random_orthogonal(int m, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd g(m, m);
    for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = gauss(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR();
    // Sign fix makes Q Haar-distributed and independent of the QR convention.
    for (int c = 0; c < m; ++c) {
        if (r(c, c) < 0) q.col(c) = -q.col(c);
    }
    return q;
}

// Unit-power band-pass kernel for shaping white noise.
std::vector<double> noise_shaping_taps(const SynthConfig& cfg) {
    auto taps = design_bandpass(cfg.sample_rate_hz, cfg.low_hz, cfg.high_hz, default_num_taps(cfg.sample_rate_hz)).taps;
    double power = 0.0;
    for (double t : taps) power += t * t;
    for (double& t : taps) t /= std::sqrt(power);
    return taps;
}

}  // namespace

void SynthConfig::validate() const {
    auto bad = [](const std::string& field, const std::string& why) { fail(ErrorKind::Config, field + " " + why); };
    if (m < 4) bad("synth.m", "must be >= 4");
    if (!(sample_rate_hz > 0)) bad("synth.sample_rate_hz", "must be positive");
    if (trials_per_gesture < 2) bad("synth.trials_per_gesture", "must be >= 2");
    if (!(snr >= 0) || !std::isfinite(snr)) bad("synth.snr", "must be a finite value >= 0");
    if (!(low_hz > 0)) bad("band.low_hz", "must be positive");
    if (!(high_hz > low_hz)) bad("band.high_hz", "must exceed band.low_hz");
    if (!(high_hz < sample_rate_hz / 2)) bad("band.high_hz", "must be below Nyquist");
    if (!(prepare_s >= 0)) bad("synth.prepare_s", "must be >= 0");
    if (!(imagery_s > 0)) bad("synth.imagery_s", "must be positive");
}

Eigen::MatrixXd SynthModel::channel_cov(int leaf) const {
    return mixing * source_cov[static_cast<std::size_t>(leaf)] * mixing.transpose();
}

SynthModel build_model(const SynthConfig& cfg) {
    cfg.validate();
    const int m = cfg.m;
    const int group = m / 4;

    SynthModel model;
    model.base = Eigen::MatrixXd::Identity(m, m);
    for (int a = 0; a < kNumLevels; ++a) {
        Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m, m);
        const int positive = (group + 1) / 2;
        for (int i = 0; i < group; ++i) d(a * group + i, a * group + i) = i < positive ? kAxisScale[a] : -kAxisScale[a];
        model.perturbation[a] = d;
    }
    for (int leaf = 0; leaf < kNumGestures; ++leaf) {
        const auto g = GestureClass::from_leaf_index(leaf);
        Eigen::MatrixXd shift = Eigen::MatrixXd::Zero(m, m);
        for (int a = 0; a < kNumLevels; ++a) shift += cfg.snr * g.sign_at(a + 1) * model.perturbation[a];
        const Eigen::MatrixXd raw = model.base + shift;
        const Eigen::MatrixXd spd = clip_to_spd(raw);
        const double change = (spd - raw).norm();
        if (change > kMaxProjectionChange * shift.norm()) {
            std::ostringstream os;
            os << "synth.snr=" << cfg.snr << " is too large: SPD projection changes the perturbation of gesture "
               << g.to_string() << " by " << 100.0 * change / shift.norm() << "%";
            fail(ErrorKind::Config, os.str());
        }
        model.source_cov[leaf] = spd;
    }
    auto rng = stream(cfg.seed, 0x6d6978 /* "mix" */, 0);
    model.mixing = Eigen::MatrixXd::Identity(m, m) + kMixingStrength * random_orthogonal(m, rng);
    return model;
}

TrialMatrix generate_trial(const SynthModel& model, const SynthConfig& cfg, const GestureClass& gesture,
                           std::uint64_t trial_index, double duration_s, double prepare_s) {
    const int m = cfg.m;
    const auto n = static_cast<Eigen::Index>(std::llround(duration_s * cfg.sample_rate_hz));
    const auto n_prepare =
        std::min(n, static_cast<Eigen::Index>(std::llround(std::max(prepare_s, 0.0) * cfg.sample_rate_hz)));
    const auto taps = noise_shaping_taps(cfg);
    const auto L = static_cast<Eigen::Index>(taps.size());

    auto rng = stream(cfg.seed, 0x747269616c /* "trial" */, trial_index);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd white(n + L - 1, m);
    for (Eigen::Index c = 0; c < m; ++c) {
        for (Eigen::Index s = 0; s < white.rows(); ++s) white(s, c) = gauss(rng);
    }
    // Valid-mode convolution: every output sample sees a full kernel.
    Eigen::MatrixXd shaped(m, n);
    for (Eigen::Index c = 0; c < m; ++c) {
        const double* x = white.col(c).data();
        for (Eigen::Index s = 0; s < n; ++s) {
            double acc = 0.0;
            for (Eigen::Index j = 0; j < L; ++j) acc += taps[j] * x[s + L - 1 - j];
            shaped(c, s) = acc;
        }
    }

    const Eigen::MatrixXd prep_factor = model.mixing * Eigen::LLT<Eigen::MatrixXd>(model.base).matrixL().toDenseMatrix();
    const Eigen::MatrixXd task_factor =
        model.mixing *
        Eigen::LLT<Eigen::MatrixXd>(model.source_cov[gesture.leaf_index()]).matrixL().toDenseMatrix();

    TrialMatrix t{Eigen::MatrixXd(m, n), cfg.sample_rate_hz};
    t.data.leftCols(n_prepare) = prep_factor * shaped.leftCols(n_prepare);
    t.data.rightCols(n - n_prepare) = task_factor * shaped.rightCols(n - n_prepare);
    t.data = t.data.cast<float>().cast<double>();
    return t;
}

Dataset generate(const SynthModel& model, const SynthConfig& cfg) {
    cfg.validate();
    Dataset ds;
    ds.subject_id = cfg.subject_id;
    ds.sample_rate_hz = cfg.sample_rate_hz;
    for (int c = 0; c < cfg.m; ++c) ds.channel_names.push_back("ch" + std::to_string(c + 1));
    const int total = cfg.trials_per_gesture * kNumGestures;
    ds.trials.resize(static_cast<std::size_t>(total));
    for (int i = 0; i < total; ++i) {
        Trial& t = ds.trials[static_cast<std::size_t>(i)];
        t.meta.gesture = GestureClass::from_leaf_index(i % kNumGestures);
        t.meta.onset_s = cfg.prepare_s;
        t.meta.duration_s = cfg.imagery_s;
        t.matrix = generate_trial(model, cfg, t.meta.gesture, static_cast<std::uint64_t>(i),
                                  cfg.prepare_s + cfg.imagery_s, cfg.prepare_s);
    }
    return ds;
}

nlohmann::json synth_model_json(const SynthModel& model, const SynthConfig& cfg) {
    auto mat = [](const Eigen::MatrixXd& x) {
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            std::vector<double> row(static_cast<std::size_t>(x.cols()));
            for (Eigen::Index c = 0; c < x.cols(); ++c) row[static_cast<std::size_t>(c)] = x(r, c);
            rows.push_back(row);
        }
        return rows;
    };
    nlohmann::json j;
    j["config"] = {{"m", cfg.m},
                   {"sample_rate_hz", cfg.sample_rate_hz},
                   {"trials_per_gesture", cfg.trials_per_gesture},
                   {"snr", cfg.snr},
                   {"seed", cfg.seed},
                   {"band", {{"low_hz", cfg.low_hz}, {"high_hz", cfg.high_hz}}},
                   {"prepare_s", cfg.prepare_s},
                   {"imagery_s", cfg.imagery_s}};
    j["axis_scale"] = kAxisScale;
    j["base"] = mat(model.base);
    j["mixing"] = mat(model.mixing);
    j["perturbations"] = nlohmann::json::array();
    for (const auto& d : model.perturbation) j["perturbations"].push_back(mat(d));
    j["gestures"] = nlohmann::json::array();
    for (int leaf = 0; leaf < kNumGestures; ++leaf) {
        const auto g = GestureClass::from_leaf_index(leaf);
        j["gestures"].push_back({{"leaf_index", leaf},
                                 {"hand", to_string(g.hand)},
                                 {"fingers", to_string(g.fingers)},
                                 {"thumb", to_string(g.thumb)},
                                 {"source_cov", mat(model.source_cov[leaf])},
                                 {"channel_cov", mat(model.channel_cov(leaf))}});
    }
    return j;
}

}  // namespace hcsp
