#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <string>

#include "hcsp/dataio.hpp"
#include "hcsp/hierarchy.hpp"

namespace hcsp {

struct SynthConfig {
    int m = 16;
    double sample_rate_hz = 256.0;
    int trials_per_gesture = 20;
    double snr = 1.0;
    std::uint64_t seed = 1;
    double low_hz = 3.0;
    double high_hz = 30.0;
    double prepare_s = 2.0;
    double imagery_s = 5.0;
    std::string subject_id = "synthetic";

    /// Config error naming the offending field.
    void validate() const;
};

/// Generative model of the synthetic recordings.
///
/// Sources are independent with covariance
///   base + snr * (l1 * D1 + l2 * D2 + l3 * D3)
/// for gesture (l1, l2, l3), where each D_a is diagonal on its own group of
/// m/4 source channels (half +scale_a, half -scale_a). Channels are observed
/// through mixing = I + 0.3 Q with Q a seeded random orthogonal matrix.
struct SynthModel {
    Eigen::MatrixXd base;
    std::array<Eigen::MatrixXd, kNumLevels> perturbation;  // D1, D2, D3 (unscaled by snr)
    std::array<Eigen::MatrixXd, kNumGestures> source_cov;
    Eigen::MatrixXd mixing;

    /// Covariance of the observed channels for a leaf: A S A'.
    Eigen::MatrixXd channel_cov(int leaf) const;
};

/// Per-axis perturbation magnitudes; the thumb axis is the weakest.
inline constexpr std::array<double, kNumLevels> kAxisScale{0.30, 0.24, 0.18};

SynthModel build_model(const SynthConfig& cfg);

/// One trial of `duration_s` seconds for `gesture`. The first `prepare_s`
/// seconds (clamped to the duration) use the base covariance. Samples are
/// rounded to float32 precision.
TrialMatrix generate_trial(const SynthModel& model, const SynthConfig& cfg, const GestureClass& gesture,
                           std::uint64_t trial_index, double duration_s, double prepare_s);

/// trials_per_gesture * 8 trials in gesture-cycling order, each
/// prepare_s + imagery_s long with the segment starting at prepare_s.
Dataset generate(const SynthModel& model, const SynthConfig& cfg);

nlohmann::json synth_model_json(const SynthModel& model, const SynthConfig& cfg);

}  // namespace hcsp
