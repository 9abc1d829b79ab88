#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <vector>

#include "hcsp/eval.hpp"
#include "hcsp/synthgen.hpp"

namespace hcsp {

/// Effective configuration of a CLI run. Every JSON field is optional;
/// missing fields keep the defaults below.
struct RunConfig {
    PreprocessConfig preprocess;
    int k = 3;
    int t_max = 5;
    EvidenceMode evidence_mode = EvidenceMode::Subwindows;
    Topology topology = Topology::Pooled;
    LdaMode lda_mode = LdaMode::PerComponent;
    double threshold = 0.9;
    int N = 5;
    InterLevelPrior prior;  // uniform unless given
    bool uniform_prior = true;
    std::uint64_t seed = 1;
    int workers = 1;
    SynthConfig synth;
    std::vector<int> feature_counts;  // empty: default sweep for the dataset
    std::vector<int> window_lengths{1, 2, 3, 4, 5};

    TrainConfig train_config() const;
    RunOptions run_options() const;
    /// Config error naming the first invalid field.
    void validate() const;
};

/// Parses and validates; throws config errors naming the field.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

InterLevelPrior parse_prior(const nlohmann::json& j);

/// The effective config, echoed into reports.
nlohmann::json config_json(const RunConfig& cfg);

}  // namespace hcsp
