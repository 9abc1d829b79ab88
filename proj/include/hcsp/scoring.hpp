#pragma once

#include <Eigen/Dense>

#include <span>

namespace hcsp {

/// per_component: one scalar LDA per feature, score F = w .* f (2k scores).
/// joint: one 2k-dimensional LDA direction, score F = w' f (1 score).
enum class LdaMode { PerComponent, Joint };

struct FisherWeights {
    Eigen::VectorXd w;
    LdaMode mode = LdaMode::PerComponent;

    Eigen::Index score_dim() const noexcept { return mode == LdaMode::PerComponent ? w.size() : 1; }
};

/// Per component K: w_K = (var_neg_K + var_pos_K)^-1 (mu_pos_K - mu_neg_K),
/// sample variances (n - 1). Joint mode uses the full pooled covariance.
/// A zero pooled variance is floored, never an error.
FisherWeights fit_fisher(std::span<const Eigen::VectorXd> features_neg, std::span<const Eigen::VectorXd> features_pos,
                         LdaMode mode = LdaMode::PerComponent);

Eigen::VectorXd score(const FisherWeights& w, const Eigen::VectorXd& f);

/// Multivariate normal with a cached Cholesky factor.
class GaussianDensity {
public:
    GaussianDensity() = default;
    /// Throws a numerical error if `covariance` is not positive definite.
    GaussianDensity(Eigen::VectorXd mean, Eigen::MatrixXd covariance);

    const Eigen::VectorXd& mean() const noexcept { return mean_; }
    const Eigen::MatrixXd& covariance() const noexcept { return cov_; }
    Eigen::Index dim() const noexcept { return mean_.size(); }

    double log_pdf(const Eigen::VectorXd& x) const;

private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd cov_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    double log_norm_ = 0.0;  // -0.5 * log((2 pi)^d det(cov))
};

/// Sample mean and (n - 1) covariance plus 1e-6 * mean(diag) * I. Needs >= 2 samples.
GaussianDensity fit_density(std::span<const Eigen::VectorXd> scores);

/// Exact multivariate normal log-density; parameter error on dimension mismatch.
double log_likelihood(const GaussianDensity& density, const Eigen::VectorXd& F);

}  // namespace hcsp
