#include "dee/core.hpp"

#include <cmath>
#include <string>

namespace dee {

double BasisSpec::eval(int k, double t) const {
    if (k < 1) throw std::invalid_argument("basis index must be >= 1");
    if (k == 1) return 1.0;
    const double p = static_cast<double>(k / 2);
    return (k % 2 == 0) ? M_SQRT2 * std::cos(p * t) : M_SQRT2 * std::sin(p * t);
}

double basis_eval(const BasisSpec& basis, int k, double t) { return basis.eval(k, t); }

void LabeledSet::validate() const {
    if (X.rows() != y.size())
        throw std::invalid_argument("labeled set: X has " + std::to_string(X.rows()) + " rows but y has " +
                                    std::to_string(y.size()) + " entries");
    if (X.rows() < 1) throw std::invalid_argument("labeled set is empty");
}

DesignMatrix DesignMatrix::leading(int d) const {
    if (d < 1 || d > this->d()) throw std::out_of_range("model size outside the stored design");
    return {values.leftCols(d), basis};
}

DesignMatrix build_design(const BasisSpec& basis, const Matrix& X, int d) {
    if (d < 1) throw std::invalid_argument("model size must be >= 1");
    if (X.rows() < 1) throw std::invalid_argument("covariate matrix is empty");
    Matrix values = Matrix::Zero(X.rows(), d);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index m = 0; m < X.cols(); ++m) {
            const double t = X(i, m);
            values(i, 0) += 1.0;
            // cos/sin pairs share the frequency p = k / 2
            for (int k = 2; k <= d; k += 2) {
                const double p = static_cast<double>(k / 2);
                values(i, k - 1) += M_SQRT2 * std::cos(p * t);
                if (k + 1 <= d) values(i, k) += M_SQRT2 * std::sin(p * t);
            }
        }
    }
    return {std::move(values), basis};
}

double symmetric_rcond(const Matrix& a) {
    // LDLT::rcond skips zero pivots, so it misses exact singularity.
    const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(a, Eigen::EigenvaluesOnly).eigenvalues();
    const double top = ev.cwiseAbs().maxCoeff();
    if (!(top > 0.0)) return 0.0;
    return std::max(ev.minCoeff(), 0.0) / top;
}

FittedModel ridge_lse(const DesignMatrix& phi, const Vector& y, double lambda) {
    if (phi.rows() != y.size()) throw std::invalid_argument("ridge_lse: design rows and response length differ");
    if (lambda < 0.0) throw std::invalid_argument("ridge_lse: negative ridge coefficient");
    const auto n = static_cast<double>(phi.rows());
    const auto& P = phi.values;

    Matrix normal = P.transpose() * P;
    normal.diagonal().array() += n * lambda;
    Eigen::LDLT<Matrix> ldlt(normal);
    if (ldlt.info() != Eigen::Success || !(symmetric_rcond(normal) >= kMinRcond))
        throw DegenerateDesign("normal matrix is numerically singular (d=" + std::to_string(phi.d()) + ")");

    FittedModel fit;
    fit.d = phi.d();
    fit.alpha = ldlt.solve(P.transpose() * y);
    fit.train_loss = empirical_loss(phi, y, fit.alpha);
    fit.ridge_lambda = lambda;
    return fit;
}

double empirical_loss(const DesignMatrix& phi, const Vector& y, const Vector& alpha) {
    return (y - phi.values * alpha).squaredNorm() / static_cast<double>(y.size());
}

Matrix correlation_matrix(const Matrix& phi) {
    if (phi.rows() < 1) throw std::invalid_argument("correlation_matrix: no rows");
    Matrix c = (phi.transpose() * phi) / static_cast<double>(phi.rows());
    // exact symmetry, the product is only symmetric up to rounding
    return 0.5 * (c + c.transpose());
}

Matrix correlation_matrix(const DesignMatrix& phi) { return correlation_matrix(phi.values); }

const FittedModel& ModelPath::at(int d) const {
    if (d < 1 || d > d_max) throw std::out_of_range("model size " + std::to_string(d) + " outside path");
    return models[static_cast<std::size_t>(d - 1)];
}

ModelPath fit_model_path(const LabeledSet& data, const BasisSpec& basis, int d_max, double lambda) {
    if (d_max < 1) throw std::invalid_argument("d_max must be >= 1");
    data.validate();
    ModelPath path;
    path.design = build_design(basis, data.X, d_max);
    path.d_max = d_max;
    path.models.reserve(static_cast<std::size_t>(d_max));
    for (int d = 1; d <= d_max; ++d) {
        try {
            path.models.push_back(ridge_lse(path.design.leading(d), data.y, lambda));
        } catch (const DegenerateDesign& e) {
            throw DegenerateDesign(std::string("model path: ") + e.what());
        }
    }
    return path;
}

BlockPartition block_partition(const UnlabeledSet& pool, int n) {
    if (n < 1) throw std::invalid_argument("block size must be >= 1");
    const auto count = pool.size() / n;
    if (count == 0) throw std::invalid_argument("unlabeled pool smaller than one block");
    BlockPartition out;
    out.block_size = n;
    out.blocks.reserve(static_cast<std::size_t>(count));
    for (Eigen::Index b = 0; b < count; ++b) out.blocks.emplace_back(pool.X.middleRows(b * n, n));
    return out;
}

Matrix design_inverse_root(const Matrix& design, double ridge) {
    const Eigen::Index n = design.rows(), d = design.cols();
    if (n < 1) throw std::invalid_argument("design_inverse_root: no rows");
    // [Phi / sqrt(n); sqrt(ridge) I] has Gram matrix C_hat + ridge I, and its R
    // factor carries the square root of that condition number.
    Matrix stacked(n + d, d);
    stacked.topRows(n) = design / std::sqrt(static_cast<double>(n));
    stacked.bottomRows(d) = Matrix::Identity(d, d) * std::sqrt(ridge);
    const Eigen::HouseholderQR<Matrix> qr(stacked);
    const Matrix r = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
    if (!(r.diagonal().cwiseAbs().minCoeff() > 0.0)) throw DegenerateDesign("design matrix is rank deficient");
    Matrix root = r.triangularView<Eigen::Upper>().solve(Matrix::Identity(d, d));
    if (!root.allFinite()) throw DegenerateDesign("design inverse is not finite");
    return root;
}

Matrix design_inverse(const Matrix& design, double ridge) {
    const Matrix root = design_inverse_root(design, ridge);
    const Matrix inv = root * root.transpose();
    return 0.5 * (inv + inv.transpose());
}

Matrix jittered_inverse(const Matrix& a, double ridge, double* rcond) {
    Matrix jittered = a;
    jittered.diagonal().array() += ridge;
    Eigen::LDLT<Matrix> ldlt(jittered);
    if (ldlt.info() != Eigen::Success) throw DegenerateDesign("block matrix factorization failed");
    Matrix inv = ldlt.solve(Matrix::Identity(a.rows(), a.cols()));
    if (!inv.allFinite()) throw DegenerateDesign("block matrix inverse is not finite");
    if (rcond) *rcond = symmetric_rcond(jittered);
    return 0.5 * (inv + inv.transpose());
}

}  // namespace dee
