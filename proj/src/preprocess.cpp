#include "hcsp/preprocess.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "hcsp/error.hpp"

namespace hcsp {

namespace {

constexpr double kPi = std::numbers::pi;

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x); }

}  // namespace

int default_num_taps(double sample_rate_hz) {
    int n = static_cast<int>(std::ceil(sample_rate_hz));
    return n % 2 == 0 ? n + 1 : n;
}

FilterKernel design_bandpass(double sample_rate_hz, double low_hz, double high_hz, int num_taps) {
    if (!(sample_rate_hz > 0)) fail(ErrorKind::Parameter, "sample rate must be positive");
    const double nyquist = sample_rate_hz / 2.0;
    if (!(low_hz > 0) || !(low_hz < high_hz) || !(high_hz < nyquist)) {
        std::ostringstream os;
        os << "band edges must satisfy 0 < low_hz < high_hz < " << nyquist << " Hz, got low_hz=" << low_hz
           << " high_hz=" << high_hz;
        fail(ErrorKind::Parameter, os.str());
    }
    if (num_taps < 3 || num_taps % 2 == 0) {
        fail(ErrorKind::Parameter, "num_taps must be odd and >= 3, got " + std::to_string(num_taps));
    }

    // Cutoffs as fractions of Nyquist.
    const double lo = low_hz / nyquist;
    const double hi = high_hz / nyquist;
    const double centre = 0.5 * (lo + hi);
    const double alpha = 0.5 * (num_taps - 1);

    FilterKernel k{std::vector<double>(static_cast<std::size_t>(num_taps)), low_hz, high_hz, sample_rate_hz};
    double gain = 0.0;
    for (int i = 0; i < num_taps; ++i) {
        const double m = i - alpha;
        const double ideal = hi * sinc(hi * m) - lo * sinc(lo * m);
        const double window = 0.54 - 0.46 * std::cos(2.0 * kPi * i / (num_taps - 1));
        k.taps[i] = ideal * window;
        gain += std::cos(kPi * m * centre) * k.taps[i];
    }
    for (auto& t : k.taps) t /= gain;
    // Enforce exact symmetry; the two halves differ only by rounding.
    for (int i = 0; i < num_taps / 2; ++i) {
        const double avg = 0.5 * (k.taps[i] + k.taps[num_taps - 1 - i]);
        k.taps[i] = k.taps[num_taps - 1 - i] = avg;
    }
    return k;
}

double magnitude_response(const FilterKernel& kernel, double freq_hz) {
    const double omega = 2.0 * kPi * freq_hz / kernel.sample_rate_hz;
    std::complex<double> h{0.0, 0.0};
    for (std::size_t j = 0; j < kernel.taps.size(); ++j) {
        h += kernel.taps[j] * std::polar(1.0, -omega * static_cast<double>(j));
    }
    return std::abs(h);
}

TrialMatrix apply_filter(const FilterKernel& kernel, const TrialMatrix& trial) {
    if (trial.sample_rate_hz != kernel.sample_rate_hz) {
        std::ostringstream os;
        os << "trial sample rate " << trial.sample_rate_hz << " Hz does not match filter rate "
           << kernel.sample_rate_hz << " Hz";
        fail(ErrorKind::Parameter, os.str());
    }
    const Eigen::Index n = trial.samples();
    const Eigen::Index taps = static_cast<Eigen::Index>(kernel.taps.size());
    const Eigen::Index delay = kernel.group_delay();

    // Work on samples x channels so each channel is contiguous.
    const Eigen::MatrixXd in = trial.data.transpose();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, trial.channels());
    for (Eigen::Index c = 0; c < in.cols(); ++c) {
        const double* x = in.col(c).data();
        double* y = out.col(c).data();
        for (Eigen::Index s = 0; s < n; ++s) {
            // y[s] = sum_j h[j] x[s + delay - j], x zero outside [0, n).
            const Eigen::Index j_lo = std::max<Eigen::Index>(0, s + delay - (n - 1));
            const Eigen::Index j_hi = std::min<Eigen::Index>(taps - 1, s + delay);
            double acc = 0.0;
            for (Eigen::Index j = j_lo; j <= j_hi; ++j) acc += kernel.taps[j] * x[s + delay - j];
            y[s] = acc;
        }
    }
    return {out.transpose(), trial.sample_rate_hz};
}

Eigen::Index interval_samples(double sample_rate_hz) {
    return static_cast<Eigen::Index>(std::llround(sample_rate_hz));
}

int available_intervals(const TrialMatrix& trial) {
    return static_cast<int>(trial.samples() / interval_samples(trial.sample_rate_hz));
}

namespace {

void require_intervals(const TrialMatrix& trial, int t_intervals) {
    if (t_intervals < 1) fail(ErrorKind::Parameter, "need at least one evidence interval");
    const Eigen::Index w = interval_samples(trial.sample_rate_hz);
    if (w * t_intervals > trial.samples()) {
        std::ostringstream os;
        os << "trial too short: " << t_intervals << " intervals need " << t_intervals << " s ("
           << w * t_intervals << " samples), trial has " << trial.duration_s() << " s (" << trial.samples()
           << " samples)";
        fail(ErrorKind::Parameter, os.str());
    }
}

}  // namespace

std::vector<EvidenceWindow> evidence_windows(const TrialMatrix& trial, int t_intervals) {
    require_intervals(trial, t_intervals);
    const Eigen::Index w = interval_samples(trial.sample_rate_hz);
    std::vector<EvidenceWindow> out;
    out.reserve(static_cast<std::size_t>(t_intervals));
    for (int i = 0; i < t_intervals; ++i) {
        out.push_back({trial.data.middleCols(i * w, w), i + 1, static_cast<double>(w) / trial.sample_rate_hz});
    }
    return out;
}

std::vector<EvidenceWindow> growing_windows(const TrialMatrix& trial, int t_intervals) {
    require_intervals(trial, t_intervals);
    const Eigen::Index w = interval_samples(trial.sample_rate_hz);
    std::vector<EvidenceWindow> out;
    out.reserve(static_cast<std::size_t>(t_intervals));
    for (int i = 1; i <= t_intervals; ++i) {
        out.push_back({trial.data.leftCols(i * w), i, static_cast<double>(i * w) / trial.sample_rate_hz});
    }
    return out;
}

std::vector<EvidenceWindow> make_windows(const TrialMatrix& trial, int t_intervals, EvidenceMode mode) {
    return mode == EvidenceMode::Subwindows ? evidence_windows(trial, t_intervals)
                                            : growing_windows(trial, t_intervals);
}

}  // namespace hcsp
