#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "hcsp/dataio.hpp"

namespace hcsp {

/// Symmetric m x m spatial covariance.
struct CovMatrix {
    Eigen::MatrixXd values;
    Eigen::Index dim() const noexcept { return values.rows(); }
};

/// CSP solution for one binary split.
///
/// Columns of `V` are spatial filters ordered by descending `D`, where
/// D = diag(V' S_neg V) and V' (S_neg + S_pos) V = I.
struct SpatialFilter {
    Eigen::MatrixXd V;
    Eigen::VectorXd D;
    int k = 1;  // filters kept from each end

    Eigen::Index channels() const noexcept { return V.rows(); }
    /// The 2k retained columns: the first k followed by the last k.
    Eigen::MatrixXd retained() const;
};

/// EE' / trace(EE'). Throws on an all-zero trial.
CovMatrix normalized_covariance(const Eigen::Ref<const Eigen::MatrixXd>& E);
inline CovMatrix normalized_covariance(const TrialMatrix& E) { return normalized_covariance(E.data); }

/// Mean-removed population covariance (divide by n); the variance of any
/// projection v'E is v' S v.
Eigen::MatrixXd centered_covariance(const Eigen::Ref<const Eigen::MatrixXd>& E);

/// Trial-count-weighted mean sum_j N_j C_j / sum_j N_j.
CovMatrix category_covariance(std::span<const CovMatrix> covs, std::span<const int> counts);

struct CspOptions {
    /// Ridge lambda * trace/m * I added to the composite covariance when its
    /// condition number exceeds `max_condition`.
    double ridge = 1e-6;
    double max_condition = 1e12;
};

/// Simultaneous diagonalization by whitening with the composite covariance
/// and an orthogonal eigendecomposition of the whitened S_neg.
SpatialFilter solve_csp(const CovMatrix& neg, const CovMatrix& pos, int k = 1, const CspOptions& opts = {});

/// Rayleigh quotient v' S_neg v / v' (S_neg + S_pos) v.
double rayleigh_quotient(const CovMatrix& neg, const CovMatrix& pos, const Eigen::VectorXd& v);

/// 2k x n matrix of the retained filter outputs V_ret' E.
Eigen::MatrixXd project(const SpatialFilter& filter, const Eigen::Ref<const Eigen::MatrixXd>& E, int k);

/// log(var(row K) / sum_q var(row q)) with population variances floored at
/// 1e-12 of the total.
Eigen::VectorXd csp_features(const Eigen::Ref<const Eigen::MatrixXd>& projected);

/// Same features computed from the window's centered covariance instead of
/// the projected samples. Used by training, where windows are reused across
/// many filters.
Eigen::VectorXd csp_features_from_covariance(const SpatialFilter& filter, const Eigen::MatrixXd& centered_cov);

}  // namespace hcsp
