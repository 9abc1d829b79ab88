#pragma once

#include <Eigen/Dense>

#include <vector>

#include "hcsp/dataio.hpp"

namespace hcsp {

/// Linear-phase FIR band-pass kernel.
struct FilterKernel {
    std::vector<double> taps;  // odd length, symmetric
    double low_hz = 0.0;
    double high_hz = 0.0;
    double sample_rate_hz = 0.0;

    int group_delay() const noexcept { return static_cast<int>(taps.size() - 1) / 2; }
};

/// Next odd integer >= sample_rate_hz (about one second of taps).
int default_num_taps(double sample_rate_hz);

/// Hamming-windowed sinc band-pass, scaled to unit gain at the band centre.
FilterKernel design_bandpass(double sample_rate_hz, double low_hz, double high_hz, int num_taps);

/// |H(f)| of the kernel, evaluated directly from its DTFT.
double magnitude_response(const FilterKernel& kernel, double freq_hz);

/// Per-channel convolution with the group delay removed, so the output is
/// time-aligned with the input and has the same length. Samples outside the
/// input are treated as zero.
TrialMatrix apply_filter(const FilterKernel& kernel, const TrialMatrix& trial);

/// A one-interval slice of evidence.
struct EvidenceWindow {
    Eigen::MatrixXd data;  // m x w
    int index = 1;         // 1-based interval number
    double length_s = 0.0;
};

/// How evidence intervals are cut from a trial.
///   Subwindows: t consecutive, non-overlapping 1 s windows; one likelihood term each.
///   Growing:    windows [0, i s) for i = 1..t; the i-th window alone is the evidence at interval i.
enum class EvidenceMode { Subwindows, Growing };

/// Samples per one-second interval: round(sample_rate_hz).
Eigen::Index interval_samples(double sample_rate_hz);

/// Number of whole one-second intervals the trial holds.
int available_intervals(const TrialMatrix& trial);

/// t consecutive non-overlapping 1 s windows starting at sample 0, indices 1..t.
std::vector<EvidenceWindow> evidence_windows(const TrialMatrix& trial, int t_intervals);

/// t windows starting at sample 0 with lengths 1..t seconds.
std::vector<EvidenceWindow> growing_windows(const TrialMatrix& trial, int t_intervals);

std::vector<EvidenceWindow> make_windows(const TrialMatrix& trial, int t_intervals, EvidenceMode mode);

}  // namespace hcsp
