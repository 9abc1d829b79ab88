#include "hcsp/scoring.hpp"

#include <cmath>
#include <numbers>

#include "hcsp/error.hpp"

namespace hcsp {

namespace {

constexpr double kPooledVarianceFloor = 1e-12;
constexpr double kDensityRidge = 1e-6;
// Used when every sample is identical and mean(diag) is zero.
constexpr double kAbsoluteDensityFloor = 1e-12;

struct Moments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;  // (n - 1) normalized; zero for a single sample
};

Moments moments(std::span<const Eigen::VectorXd> xs) {
    const Eigen::Index d = xs.front().size();
    Moments mo{Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d)};
    for (const auto& x : xs) {
        if (x.size() != d) fail(ErrorKind::Parameter, "feature vectors differ in length");
        mo.mean += x;
    }
    mo.mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return mo;
    for (const auto& x : xs) {
        const Eigen::VectorXd c = x - mo.mean;
        mo.cov.noalias() += c * c.transpose();
    }
    mo.cov /= static_cast<double>(xs.size() - 1);
    return mo;
}

}  // namespace

FisherWeights fit_fisher(std::span<const Eigen::VectorXd> features_neg, std::span<const Eigen::VectorXd> features_pos,
                         LdaMode mode) {
    if (features_neg.empty() || features_pos.empty()) {
        fail(ErrorKind::Training, "Fisher LDA needs samples from both categories");
    }
    if (features_neg.front().size() != features_pos.front().size()) {
        fail(ErrorKind::Parameter, "categories have different feature counts");
    }
    const Moments neg = moments(features_neg);
    const Moments pos = moments(features_pos);
    const Eigen::VectorXd diff = pos.mean - neg.mean;

    FisherWeights out;
    out.mode = mode;
    if (mode == LdaMode::PerComponent) {
        const Eigen::VectorXd pooled =
            (neg.cov.diagonal() + pos.cov.diagonal()).cwiseMax(kPooledVarianceFloor);
        out.w = diff.cwiseQuotient(pooled);
        return out;
    }
    Eigen::MatrixXd pooled = neg.cov + pos.cov;
    const double scale = std::max(pooled.diagonal().mean(), kPooledVarianceFloor);
    pooled.diagonal().array() += kDensityRidge * scale;
    out.w = pooled.ldlt().solve(diff);
    return out;
}

Eigen::VectorXd score(const FisherWeights& w, const Eigen::VectorXd& f) {
    if (w.w.size() != f.size()) {
        fail(ErrorKind::Parameter, "feature vector has " + std::to_string(f.size()) + " components, weights have " +
                                       std::to_string(w.w.size()));
    }
    if (w.mode == LdaMode::PerComponent) return w.w.cwiseProduct(f);
    Eigen::VectorXd F(1);
    F(0) = w.w.dot(f);
    return F;
}

GaussianDensity::GaussianDensity(Eigen::VectorXd mean, Eigen::MatrixXd covariance)
    : mean_(std::move(mean)), cov_(std::move(covariance)) {
    if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
        fail(ErrorKind::Parameter, "density covariance does not match mean dimension");
    }
    llt_.compute(cov_);
    if (llt_.info() != Eigen::Success) fail(ErrorKind::Numerical, "density covariance is not positive definite");
    const double log_det = 2.0 * llt_.matrixL().toDenseMatrix().diagonal().array().log().sum();
    log_norm_ = -0.5 * (static_cast<double>(dim()) * std::log(2.0 * std::numbers::pi) + log_det);
}

double GaussianDensity::log_pdf(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd z = llt_.matrixL().solve(x - mean_);
    return log_norm_ - 0.5 * z.squaredNorm();
}

GaussianDensity fit_density(std::span<const Eigen::VectorXd> scores) {
    if (scores.size() < 2) {
        fail(ErrorKind::Training, "density estimation needs at least 2 samples, got " + std::to_string(scores.size()));
    }
    Moments mo = moments(scores);
    const double mean_diag = mo.cov.diagonal().mean();
    const double floor = mean_diag > 0.0 ? kDensityRidge * mean_diag : kAbsoluteDensityFloor;
    mo.cov.diagonal().array() += floor;
    mo.cov = 0.5 * (mo.cov + mo.cov.transpose());
    return {std::move(mo.mean), std::move(mo.cov)};
}

double log_likelihood(const GaussianDensity& density, const Eigen::VectorXd& F) {
    if (F.size() != density.dim()) {
        fail(ErrorKind::Parameter, "score vector has dimension " + std::to_string(F.size()) + ", density expects " +
                                       std::to_string(density.dim()));
    }
    return density.log_pdf(F);
}

}  // namespace hcsp
