#pragma once

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "hcsp/hierarchy.hpp"

namespace hcsp {

/// One multichannel recording: channels x samples.
struct TrialMatrix {
    Eigen::MatrixXd data;  // m x n
    double sample_rate_hz = 0.0;

    Eigen::Index channels() const noexcept { return data.rows(); }
    Eigen::Index samples() const noexcept { return data.cols(); }
    double duration_s() const noexcept { return static_cast<double>(samples()) / sample_rate_hz; }

    /// Throws a parameter error unless m >= 2, n >= 1, the rate is positive and
    /// every entry is finite.
    void validate() const;
};

struct TrialMeta {
    std::filesystem::path file_path;  // relative to the manifest directory
    GestureClass gesture;
    double onset_s = 0.0;
    double duration_s = 0.0;
};

struct Trial {
    TrialMeta meta;
    TrialMatrix matrix;  // the whole file; see mi_segment()
};

/// Labeled trials of one subject.
///
/// Each trial keeps the full extent of its file. The motor-imagery segment
/// [onset_s, onset_s + duration_s] is checked at load and extracted with
/// mi_segment(); the samples before onset give the band-pass filter room to
/// settle.
struct Dataset {
    std::string subject_id;
    double sample_rate_hz = 0.0;
    std::vector<std::string> channel_names;
    std::vector<Trial> trials;

    std::size_t channels() const noexcept { return channel_names.size(); }
    std::size_t size() const noexcept { return trials.size(); }
    std::vector<GestureClass> labels() const;
};

enum class TrialFormat { Binary, Csv };

/// First sample and sample count of the [onset, onset + duration] segment.
struct SampleRange {
    Eigen::Index first = 0;
    Eigen::Index count = 0;
};
SampleRange segment_range(const TrialMeta& meta, double sample_rate_hz);

/// Trial matrix restricted to its motor-imagery segment.
TrialMatrix mi_segment(const Trial& trial);

Dataset load_manifest(const std::filesystem::path& manifest_path);

/// Writes one trial file per trial plus manifest.json into `dir`, returning the
/// manifest path. Binary files hold float32, so a round trip is bit-exact only
/// for float-representable samples.
std::filesystem::path write_dataset(const Dataset& ds, const std::filesystem::path& dir,
                                    TrialFormat format = TrialFormat::Binary);

/// Reads a .f32 or .csv trial file. For .f32 the channel count must be given.
TrialMatrix read_trial_file(const std::filesystem::path& path, Eigen::Index channels,
                            double sample_rate_hz);
void write_trial_file(const std::filesystem::path& path, const TrialMatrix& trial,
                      const std::vector<std::string>& channel_names);

std::array<int, kNumGestures> gesture_counts(const Dataset& ds);

Partition partition(const Dataset& ds, Level level, const CategoryScope& scope);

}  // namespace hcsp
