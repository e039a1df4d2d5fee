#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace dee {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Ridge coefficient used throughout unless a caller overrides it.
inline constexpr double kDefaultRidge = 1e-9;

/// Reciprocal condition number below which a ridge-augmented normal matrix
/// is treated as numerically singular.
inline constexpr double kMinRcond = 1e-12;

/// Raised when a normal matrix cannot be factorized reliably even after
/// adding the ridge term.
class DegenerateDesign : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class BasisKind { fourier };

/// Scalar basis family applied coordinate-wise to an M-dimensional covariate.
struct BasisSpec {
    BasisKind kind = BasisKind::fourier;
    int covariate_dim = 1;

    /// phi_1 = 1, phi_{2p} = sqrt(2) cos(p t), phi_{2p+1} = sqrt(2) sin(p t).
    double eval(int k, double t) const;
};

double basis_eval(const BasisSpec& basis, int k, double t);

struct LabeledSet {
    Matrix X;
    Vector y;

    Eigen::Index size() const { return X.rows(); }
    /// Throws std::invalid_argument unless rows(X) == size(y) >= 1.
    void validate() const;
};

struct UnlabeledSet {
    Matrix X;

    Eigen::Index size() const { return X.rows(); }
};

struct DesignMatrix {
    Matrix values;
    BasisSpec basis;

    Eigen::Index rows() const { return values.rows(); }
    int d() const { return static_cast<int>(values.cols()); }
    /// Design of the nested model with the first `d` basis functions.
    DesignMatrix leading(int d) const;
};

/// Entry (i, k) = sum over coordinates m of phi_k(X(i, m)).
DesignMatrix build_design(const BasisSpec& basis, const Matrix& X, int d);

struct FittedModel {
    int d = 0;
    Vector alpha;
    double train_loss = 0.0;
    double ridge_lambda = 0.0;
};

/// lambda_min / lambda_max of a symmetric matrix, 0 when it is not positive definite.
double symmetric_rcond(const Matrix& a);

/// Solves (Phi^T Phi + n * lambda * I) alpha = Phi^T y through an LDL^T
/// factorization. Throws DegenerateDesign when the factorization fails or
/// symmetric_rcond of the normal matrix drops below kMinRcond.
FittedModel ridge_lse(const DesignMatrix& phi, const Vector& y, double lambda);

/// (1/n) * ||y - Phi alpha||^2
double empirical_loss(const DesignMatrix& phi, const Vector& y, const Vector& alpha);

/// (1/rows) * Phi^T Phi
Matrix correlation_matrix(const DesignMatrix& phi);
Matrix correlation_matrix(const Matrix& phi);

struct ModelPath {
    std::vector<FittedModel> models;  // models[d - 1] has size d
    DesignMatrix design;              // labeled design at d_max
    int d_max = 0;

    const FittedModel& at(int d) const;
    int n() const { return static_cast<int>(design.rows()); }
};

/// Fits one ridge LSE per d = 1..d_max on the full labeled set.
ModelPath fit_model_path(const LabeledSet& data, const BasisSpec& basis, int d_max, double lambda);

struct BlockPartition {
    std::vector<Matrix> blocks;
    int block_size = 0;

    int count() const { return static_cast<int>(blocks.size()); }
};

/// Cuts the pool into floor(n'/n) consecutive blocks of n rows; trailing rows
/// that do not fill a block are dropped.
BlockPartition block_partition(const UnlabeledSet& pool, int n);

/// Upper-triangular S with S S^T = (Phi^T Phi / n + ridge I)^{-1}, from a QR
/// factorization of the design rather than from the normal matrix.
Matrix design_inverse_root(const Matrix& design, double ridge);
/// (Phi^T Phi / n + ridge I)^{-1} computed through design_inverse_root.
Matrix design_inverse(const Matrix& design, double ridge);

/// Ridge-jittered symmetric inverse (A + ridge * I)^{-1}. Reports the
/// reciprocal condition number through `rcond` when non-null. Throws
/// DegenerateDesign only when the factorization itself fails or produces
/// non-finite entries.
Matrix jittered_inverse(const Matrix& a, double ridge, double* rcond = nullptr);

}  // namespace dee
