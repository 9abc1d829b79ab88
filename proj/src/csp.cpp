#include "hcsp/csp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "hcsp/error.hpp"

namespace hcsp {

namespace {

constexpr double kVarianceFloor = 1e-12;

Eigen::VectorXd log_variance_ratio(Eigen::VectorXd var) {
    const double total = var.sum();
    for (auto& v : var) v = std::max(v, kVarianceFloor * total);
    const double clamped_total = var.sum();
    return (var.array() / clamped_total).log().matrix();
}

}  // namespace

Eigen::MatrixXd SpatialFilter::retained() const {
    Eigen::MatrixXd out(V.rows(), 2 * k);
    out.leftCols(k) = V.leftCols(k);
    out.rightCols(k) = V.rightCols(k);
    return out;
}

CovMatrix normalized_covariance(const Eigen::Ref<const Eigen::MatrixXd>& E) {
    Eigen::MatrixXd c = E * E.transpose();
    const double tr = c.trace();
    if (!(tr > 0.0) || !std::isfinite(tr)) {
        fail(ErrorKind::Numerical, "degenerate trial: trace(EE') = " + std::to_string(tr));
    }
    c /= tr;
    return {0.5 * (c + c.transpose())};
}

Eigen::MatrixXd centered_covariance(const Eigen::Ref<const Eigen::MatrixXd>& E) {
    const Eigen::MatrixXd centered = E.colwise() - E.rowwise().mean();
    return centered * centered.transpose() / static_cast<double>(E.cols());
}

CovMatrix category_covariance(std::span<const CovMatrix> covs, std::span<const int> counts) {
    if (covs.empty()) fail(ErrorKind::Parameter, "category covariance of an empty class list");
    if (covs.size() != counts.size()) fail(ErrorKind::Parameter, "one trial count per class covariance required");
    const Eigen::Index m = covs.front().dim();
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(m, m);
    double total = 0.0;
    for (std::size_t j = 0; j < covs.size(); ++j) {
        if (covs[j].dim() != m) fail(ErrorKind::Parameter, "class covariances differ in size");
        if (counts[j] <= 0) fail(ErrorKind::Parameter, "trial counts must be positive");
        acc += counts[j] * covs[j].values;
        total += counts[j];
    }
    return {acc / total};
}

SpatialFilter solve_csp(const CovMatrix& neg, const CovMatrix& pos, int k, const CspOptions& opts) {
    const Eigen::Index m = neg.dim();
    if (pos.dim() != m || neg.values.cols() != m || pos.values.cols() != m) {
        fail(ErrorKind::Parameter, "category covariances must be square and the same size");
    }
    if (k < 1 || 2 * k > m) {
        fail(ErrorKind::Parameter, "need 1 <= k and 2k <= m, got k=" + std::to_string(k) + " m=" + std::to_string(m));
    }

    Eigen::MatrixXd composite = neg.values + pos.values;
    composite = 0.5 * (composite + composite.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> comp(composite);
    if (comp.info() != Eigen::Success) fail(ErrorKind::Numerical, "composite eigendecomposition failed");
    double lo = comp.eigenvalues().minCoeff();
    double hi = comp.eigenvalues().maxCoeff();
    if (!(hi > 0.0)) fail(ErrorKind::Numerical, "composite covariance is zero");
    if (lo <= 0.0 || hi / lo > opts.max_condition) {
        composite.diagonal().array() += opts.ridge * composite.trace() / static_cast<double>(m);
        comp.compute(composite);
        lo = comp.eigenvalues().minCoeff();
        hi = comp.eigenvalues().maxCoeff();
        if (!(lo > 0.0) || hi / lo > opts.max_condition) {
            std::ostringstream os;
            os << "composite covariance singular after regularization (condition estimate "
               << (lo > 0.0 ? hi / lo : INFINITY) << ")";
            fail(ErrorKind::Numerical, os.str());
        }
    }

    const Eigen::MatrixXd& U = comp.eigenvectors();
    const Eigen::MatrixXd whitening =
        U * comp.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * U.transpose();
    Eigen::MatrixXd whitened_neg = whitening * neg.values * whitening;
    whitened_neg = 0.5 * (whitened_neg + whitened_neg.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> inner(whitened_neg);
    if (inner.info() != Eigen::Success) fail(ErrorKind::Numerical, "whitened eigendecomposition failed");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    const auto& ev = inner.eigenvalues();
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return ev(a) > ev(b); });

    SpatialFilter f;
    f.k = k;
    f.V.resize(m, m);
    f.D.resize(m);
    for (Eigen::Index c = 0; c < m; ++c) {
        Eigen::VectorXd v = whitening * inner.eigenvectors().col(order[c]);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        f.V.col(c) = v;
        f.D(c) = std::clamp(ev(order[c]), 0.0, 1.0);
    }
    return f;
}

double rayleigh_quotient(const CovMatrix& neg, const CovMatrix& pos, const Eigen::VectorXd& v) {
    const double num = v.dot(neg.values * v);
    const double den = v.dot((neg.values + pos.values) * v);
    return num / den;
}

Eigen::MatrixXd project(const SpatialFilter& filter, const Eigen::Ref<const Eigen::MatrixXd>& E, int k) {
    const Eigen::Index m = filter.channels();
    if (k < 1 || 2 * k > m) {
        fail(ErrorKind::Parameter, "projection needs 1 <= k and 2k <= m, got k=" + std::to_string(k) +
                                       " m=" + std::to_string(m));
    }
    if (E.rows() != m) {
        fail(ErrorKind::Parameter, "trial has " + std::to_string(E.rows()) + " channels, filter expects " +
                                       std::to_string(m));
    }
    Eigen::MatrixXd out(2 * k, E.cols());
    out.topRows(k) = filter.V.leftCols(k).transpose() * E;
    out.bottomRows(k) = filter.V.rightCols(k).transpose() * E;
    return out;
}

Eigen::VectorXd csp_features(const Eigen::Ref<const Eigen::MatrixXd>& projected) {
    const Eigen::MatrixXd centered = projected.colwise() - projected.rowwise().mean();
    const Eigen::VectorXd var = centered.rowwise().squaredNorm() / static_cast<double>(projected.cols());
    return log_variance_ratio(var);
}

Eigen::VectorXd csp_features_from_covariance(const SpatialFilter& filter, const Eigen::MatrixXd& centered_cov) {
    if (centered_cov.rows() != filter.channels()) {
        fail(ErrorKind::Parameter, "covariance size does not match the spatial filter");
    }
    const Eigen::MatrixXd w = filter.retained();
    const Eigen::VectorXd var = (w.transpose() * centered_cov * w).diagonal();
    return log_variance_ratio(var);
}

}  // namespace hcsp
