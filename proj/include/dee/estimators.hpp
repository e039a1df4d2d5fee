#pragma once

#include "dee/core.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dee {

enum class CriterionKind { DEE, mDEE1, mDEE2, mDEE3, rmDEE };

std::string to_string(CriterionKind kind);

/// A multiplicative risk estimate (1 + tr_H / n) / (1 - d / n) * L_D.
struct CorrectionEstimate {
    int d = 0;
    double tr_H = 0.0;
    double factor = 0.0;
    double risk = 0.0;
    std::optional<int> b1_used;
    bool ill_conditioned = false;  // some block C_b had rcond < kMinRcond before jitter
};

/// Empirical first and second moments of the vectorized block matrices and
/// inverses that drive the optimal split of blocks between C and V.
struct MomentSummary {
    Vector mu_bar;
    Vector nu_bar;
    double a1 = 0.0;
    double a2 = 0.0;
    int B = 0;
    double tr_var_mu_var_nu = 0.0;
    double tr_var_mu_nu_nu = 0.0;
    double tr_var_nu_mu_mu = 0.0;
};

double correction_factor(double tr_H, int n, int d);

/// Per-block correlation matrices and their ridge-jittered inverses for a
/// single model size. Built once and shared by every block-based criterion.
class BlockStats {
public:
    /// `designs` are the n x d block designs.
    BlockStats(std::span<const Matrix> designs, double ridge);
    BlockStats(const BlockPartition& blocks, const BasisSpec& basis, int d, double ridge);

    int count() const { return static_cast<int>(corr_.size()); }
    int d() const { return d_; }
    const Matrix& corr(int b) const { return corr_[static_cast<std::size_t>(b)]; }
    const Matrix& inv(int b) const { return inv_[static_cast<std::size_t>(b)]; }
    double rcond(int b) const { return rcond_[static_cast<std::size_t>(b)]; }  // of C_b before jitter
    bool any_ill_conditioned() const;

    Matrix mean_corr(int first, int last) const;  // blocks [first, last)
    Matrix mean_inv(int first, int last) const;

private:
    void add(const Matrix& design, double ridge, int index);

    int d_ = 0;
    std::vector<Matrix> corr_;
    std::vector<Matrix> inv_;
    std::vector<double> rcond_;
};

/// Tr(A B) for symmetric or general square A, B without forming the product.
double trace_of_product(const Matrix& a, const Matrix& b);

/// Tr(C_hat^{-1} C_tilde) from a labeled design and an unlabeled design.
double dee_trace(const Matrix& labeled_design, const Matrix& unlabeled_design, double ridge);

CorrectionEstimate dee(const ModelPath& path, const UnlabeledSet& unlabeled, int d);
CorrectionEstimate dee(const ModelPath& path, const Matrix& labeled_X, const UnlabeledSet& unlabeled, int d);

/// Average of (C_b + ridge I)^{-1} over the given block indices.
Matrix estimate_V(const BlockStats& stats, std::span<const int> indices);
Matrix estimate_V(const BlockPartition& blocks, const BasisSpec& basis, int d, std::span<const int> indices,
                  double ridge);

/// Empirical correlation matrix of basis features over the rows.
Matrix estimate_Cplus(const Matrix& rows, const BasisSpec& basis, int d);

/// Moments of the block statistics and the a1, a2 coefficients of the
/// variance a1 / B1 + a2 / (B - B1) of Tr(H_1).
MomentSummary block_moments(const BlockStats& stats);

/// Continuous minimizer of a1 / B1 + a2 / (B - B1) on (0, B).
double optimal_b1_continuous(double a1, double a2, int B);

/// Integer minimizer: evaluates the objective at the floor and the ceiling of
/// the continuous optimum, clamped to [1, B - 1]. Ties go to the ceiling.
int optimal_b1(double a1, double a2, int B);

struct B1Selection {
    int b1 = 0;
    MomentSummary summary;
};

B1Selection select_B1(const BlockStats& stats);
B1Selection select_B1(const BlockPartition& blocks, const BasisSpec& basis, int d, double ridge);

/// Tr(C_plus V_hat) for mDEE1..3. mDEE1 needs 1 <= b1 <= B - 1; mDEE2 accepts
/// 1 <= b1 <= B; mDEE3 ignores b1.
double mdee_trace(const BlockStats& stats, CriterionKind variant, int b1);

CorrectionEstimate mdee(const ModelPath& path, const BlockStats& stats, CriterionKind variant, int b1, int d);
CorrectionEstimate mdee(const ModelPath& path, const BlockPartition& blocks, CriterionKind variant, int b1, int d,
                        double ridge);

/// Median with the mean of the two central order statistics for even counts.
double median(std::vector<double> values);

/// Traces Tr(C_plus C_b^{-1}) for every unlabeled block b, with C_plus the
/// average over all blocks, preceded by the labeled block when supplied.
std::vector<double> rmdee_traces(const BlockStats& stats, const Matrix* labeled_design, double ridge);

CorrectionEstimate rmdee(const ModelPath& path, const BlockStats& stats, int d, bool include_labeled = true);
CorrectionEstimate rmdee(const ModelPath& path, const BlockPartition& blocks, const Matrix& labeled_X, int d,
                         double ridge, bool include_labeled = true);

struct Selection {
    int d_hat = 1;
    bool all_infinite = false;
};

/// argmin over risks (index 0 is d = 1). NaN counts as +inf; ties go to the
/// smallest d; when every entry is +inf, d_hat = 1 and `all_infinite` is set.
Selection select_model(std::span<const double> risks);
Selection select_model(std::span<const CorrectionEstimate> estimates);

}  // namespace dee
