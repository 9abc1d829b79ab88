#pragma once

// Generators and independent oracles shared by the test binaries.

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "hcsp/csp.hpp"
#include "hcsp/dataio.hpp"

namespace hcsp::test {

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = g(rng);
    return m;
}

/// Random SPD matrix with unit trace and a condition number of at most ~100.
inline CovMatrix random_spd(Eigen::Index m, std::mt19937_64& rng) {
    const Eigen::MatrixXd a = random_matrix(m, m, rng);
    Eigen::MatrixXd s = a * a.transpose() + 0.1 * static_cast<double>(m) * Eigen::MatrixXd::Identity(m, m);
    s /= s.trace();
    return {0.5 * (s + s.transpose())};
}

/// Unique scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("hcsp_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Small labeled dataset of float-representable white noise.
inline Dataset noise_dataset(const std::array<int, 8>& per_gesture, Eigen::Index m, Eigen::Index n,
                             std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Dataset ds;
    ds.subject_id = "noise";
    ds.sample_rate_hz = 128.0;
    for (Eigen::Index c = 0; c < m; ++c) ds.channel_names.push_back("c" + std::to_string(c));
    for (int leaf = 0; leaf < 8; ++leaf) {
        for (int r = 0; r < per_gesture[leaf]; ++r) {
            Trial t;
            t.meta.gesture = GestureClass::from_leaf_index(leaf);
            t.meta.onset_s = 0.0;
            t.meta.duration_s = static_cast<double>(n) / ds.sample_rate_hz;
            t.matrix = {random_matrix(m, n, rng).cast<float>().cast<double>(), ds.sample_rate_hz};
            ds.trials.push_back(std::move(t));
        }
    }
    return ds;
}

}  // namespace hcsp::test
