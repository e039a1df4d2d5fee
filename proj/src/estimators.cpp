#include "dee/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace dee {

std::string to_string(CriterionKind kind) {
    switch (kind) {
        case CriterionKind::DEE: return "DEE";
        case CriterionKind::mDEE1: return "mDEE1";
        case CriterionKind::mDEE2: return "mDEE2";
        case CriterionKind::mDEE3: return "mDEE3";
        case CriterionKind::rmDEE: return "rmDEE";
    }
    return "?";
}

double correction_factor(double tr_H, int n, int d) {
    if (d >= n)
        throw std::domain_error("correction factor undefined for d=" + std::to_string(d) + " >= n=" + std::to_string(n));
    const double nn = static_cast<double>(n);
    return (1.0 + tr_H / nn) / (1.0 - static_cast<double>(d) / nn);
}

namespace {

CorrectionEstimate make_estimate(const ModelPath& path, int d, double tr_H) {
    CorrectionEstimate est;
    est.d = d;
    est.tr_H = tr_H;
    est.factor = correction_factor(tr_H, path.n(), d);
    est.risk = est.factor * path.at(d).train_loss;
    return est;
}

std::vector<Matrix> block_designs(const BlockPartition& blocks, const BasisSpec& basis, int d) {
    std::vector<Matrix> out;
    out.reserve(blocks.blocks.size());
    for (const auto& rows : blocks.blocks) out.push_back(build_design(basis, rows, d).values);
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// BlockStats

BlockStats::BlockStats(std::span<const Matrix> designs, double ridge) {
    if (designs.empty()) throw std::invalid_argument("no blocks");
    d_ = static_cast<int>(designs.front().cols());
    for (std::size_t b = 0; b < designs.size(); ++b) add(designs[b], ridge, static_cast<int>(b));
}

BlockStats::BlockStats(const BlockPartition& blocks, const BasisSpec& basis, int d, double ridge)
    : BlockStats(block_designs(blocks, basis, d), ridge) {}

void BlockStats::add(const Matrix& design, double ridge, int index) {
    const Matrix corr = correlation_matrix(design);
    try {
        inv_.push_back(design_inverse(design, ridge));
    } catch (const DegenerateDesign& e) {
        throw DegenerateDesign("block " + std::to_string(index) + ": " + e.what());
    }
    corr_.push_back(corr);
    rcond_.push_back(symmetric_rcond(corr));  // before jitter, which caps the condition number
}

bool BlockStats::any_ill_conditioned() const {
    return std::any_of(rcond_.begin(), rcond_.end(), [](double r) { return !(r >= kMinRcond); });
}

Matrix BlockStats::mean_corr(int first, int last) const {
    if (first < 0 || last > count() || first >= last) throw std::out_of_range("empty block range");
    Matrix sum = Matrix::Zero(d_, d_);
    for (int b = first; b < last; ++b) sum += corr(b);
    return sum / static_cast<double>(last - first);
}

Matrix BlockStats::mean_inv(int first, int last) const {
    if (first < 0 || last > count() || first >= last) throw std::out_of_range("empty block range");
    Matrix sum = Matrix::Zero(d_, d_);
    for (int b = first; b < last; ++b) sum += inv(b);
    return sum / static_cast<double>(last - first);
}

double trace_of_product(const Matrix& a, const Matrix& b) {
    return (a.array() * b.transpose().array()).sum();
}

// ---------------------------------------------------------------------------
// DEE

double dee_trace(const Matrix& labeled_design, const Matrix& unlabeled_design, double ridge) {
    if (unlabeled_design.rows() < 1) throw std::invalid_argument("DEE needs at least one unlabeled row");
    Matrix jittered = correlation_matrix(labeled_design);
    jittered.diagonal().array() += ridge;
    if (!(symmetric_rcond(jittered) >= kMinRcond))
        throw DegenerateDesign("labeled correlation matrix is numerically singular");
    // Tr((C_hat + ridge I)^{-1} C_tilde) = |U S|_F^2 / n' with S S^T the inverse
    const Matrix us = unlabeled_design * design_inverse_root(labeled_design, ridge);
    return us.squaredNorm() / static_cast<double>(unlabeled_design.rows());
}

CorrectionEstimate dee(const ModelPath& path, const UnlabeledSet& unlabeled, int d) {
    const auto& model = path.at(d);
    const Matrix unlabeled_design = build_design(path.design.basis, unlabeled.X, d).values;
    return make_estimate(path, d, dee_trace(path.design.values.leftCols(d), unlabeled_design, model.ridge_lambda));
}

CorrectionEstimate dee(const ModelPath& path, const Matrix& labeled_X, const UnlabeledSet& unlabeled, int d) {
    const auto& model = path.at(d);
    const auto& basis = path.design.basis;
    return make_estimate(path, d,
                         dee_trace(build_design(basis, labeled_X, d).values,
                                   build_design(basis, unlabeled.X, d).values, model.ridge_lambda));
}

// ---------------------------------------------------------------------------
// mDEE building blocks

Matrix estimate_V(const BlockStats& stats, std::span<const int> indices) {
    if (indices.empty()) throw std::invalid_argument("estimate_V: no blocks selected");
    Matrix sum = Matrix::Zero(stats.d(), stats.d());
    for (int b : indices) {
        if (b < 0 || b >= stats.count()) throw std::out_of_range("estimate_V: block index out of range");
        sum += stats.inv(b);
    }
    return sum / static_cast<double>(indices.size());
}

Matrix estimate_V(const BlockPartition& blocks, const BasisSpec& basis, int d, std::span<const int> indices,
                  double ridge) {
    return estimate_V(BlockStats(blocks, basis, d, ridge), indices);
}

Matrix estimate_Cplus(const Matrix& rows, const BasisSpec& basis, int d) {
    return correlation_matrix(build_design(basis, rows, d));
}

MomentSummary block_moments(const BlockStats& stats) {
    const int B = stats.count();
    if (B < 2) throw std::invalid_argument("at least two blocks are needed to split them");
    const int dd = stats.d() * stats.d();

    // rows are vec(C_b) and vec(C_b^{-1})
    Matrix mu(B, dd), nu(B, dd);
    for (int b = 0; b < B; ++b) {
        mu.row(b) = stats.corr(b).reshaped().transpose();
        nu.row(b) = stats.inv(b).reshaped().transpose();
    }

    MomentSummary s;
    s.B = B;
    s.mu_bar = mu.colwise().mean().transpose();
    s.nu_bar = nu.colwise().mean().transpose();
    const Matrix u = mu.rowwise() - s.mu_bar.transpose();
    const Matrix v = nu.rowwise() - s.nu_bar.transpose();

    // Traces of the d^2 x d^2 covariance products, without forming them.
    const double bm1 = static_cast<double>(B - 1);
    const Matrix cross = u * v.transpose();
    s.tr_var_mu_var_nu = cross.squaredNorm() / (bm1 * bm1);
    s.tr_var_mu_nu_nu = (u * s.nu_bar).squaredNorm() / bm1;
    s.tr_var_nu_mu_mu = (v * s.mu_bar).squaredNorm() / bm1;

    s.a1 = s.tr_var_mu_var_nu / B + s.tr_var_mu_nu_nu;
    s.a2 = s.tr_var_mu_var_nu / B + s.tr_var_nu_mu_mu;
    return s;
}

double optimal_b1_continuous(double a1, double a2, int B) {
    if (B < 2) throw std::invalid_argument("at least two blocks are needed to split them");
    if (a1 < 0.0 || a2 < 0.0) throw std::invalid_argument("variance coefficients must be nonnegative");
    // (a1 - sqrt(a1 a2)) / (a1 - a2) == sqrt(a1) / (sqrt(a1) + sqrt(a2)), and
    // the right-hand side also covers a1 == a2 (B / 2) without cancellation.
    const double r1 = std::sqrt(a1), r2 = std::sqrt(a2);
    if (r1 + r2 == 0.0) return 0.5 * B;
    return r1 / (r1 + r2) * B;
}

int optimal_b1(double a1, double a2, int B) {
    const double star = optimal_b1_continuous(a1, a2, B);
    auto objective = [&](int b1) { return a1 / b1 + a2 / (B - b1); };
    const int lo = std::clamp(static_cast<int>(std::floor(star)), 1, B - 1);
    const int hi = std::clamp(static_cast<int>(std::ceil(star)), 1, B - 1);
    return objective(lo) < objective(hi) ? lo : hi;
}

B1Selection select_B1(const BlockStats& stats) {
    B1Selection out;
    out.summary = block_moments(stats);
    out.b1 = optimal_b1(out.summary.a1, out.summary.a2, out.summary.B);
    return out;
}

B1Selection select_B1(const BlockPartition& blocks, const BasisSpec& basis, int d, double ridge) {
    return select_B1(BlockStats(blocks, basis, d, ridge));
}

double mdee_trace(const BlockStats& stats, CriterionKind variant, int b1) {
    const int B = stats.count();
    switch (variant) {
        case CriterionKind::mDEE1:
            if (b1 < 1 || b1 > B - 1) throw std::invalid_argument("mDEE1 needs 1 <= b1 <= B-1");
            return trace_of_product(stats.mean_corr(0, b1), stats.mean_inv(b1, B));
        case CriterionKind::mDEE2:
            if (b1 < 1 || b1 > B) throw std::invalid_argument("mDEE2 needs 1 <= b1 <= B");
            return trace_of_product(stats.mean_corr(0, b1), stats.mean_inv(0, B));
        case CriterionKind::mDEE3:
            return trace_of_product(stats.mean_corr(0, B), stats.mean_inv(0, B));
        default:
            throw std::invalid_argument("mdee: variant must be mDEE1, mDEE2 or mDEE3");
    }
}

CorrectionEstimate mdee(const ModelPath& path, const BlockStats& stats, CriterionKind variant, int b1, int d) {
    if (stats.d() != d) throw std::invalid_argument("block statistics built for a different model size");
    auto est = make_estimate(path, d, mdee_trace(stats, variant, b1));
    if (variant != CriterionKind::mDEE3) est.b1_used = b1;
    est.ill_conditioned = stats.any_ill_conditioned();
    return est;
}

CorrectionEstimate mdee(const ModelPath& path, const BlockPartition& blocks, CriterionKind variant, int b1, int d,
                        double ridge) {
    return mdee(path, BlockStats(blocks, path.design.basis, d, ridge), variant, b1, d);
}

// ---------------------------------------------------------------------------
// rmDEE

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of an empty sample");
    const auto n = values.size();
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(values.begin(), mid, values.end());
    if (n % 2 == 1) return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(values.begin(), mid);
    return 0.5 * (lower + upper);
}

std::vector<double> rmdee_traces(const BlockStats& stats, const Matrix* labeled_design, double ridge) {
    const Matrix c_plus = stats.mean_corr(0, stats.count());
    std::vector<double> traces;
    traces.reserve(static_cast<std::size_t>(stats.count()) + 1);
    if (labeled_design) {
        const Matrix inv0 = design_inverse(*labeled_design, ridge);
        traces.push_back(trace_of_product(c_plus, inv0));
    }
    for (int b = 0; b < stats.count(); ++b) traces.push_back(trace_of_product(c_plus, stats.inv(b)));
    return traces;
}

CorrectionEstimate rmdee(const ModelPath& path, const BlockStats& stats, int d, bool include_labeled) {
    if (stats.d() != d) throw std::invalid_argument("block statistics built for a different model size");
    const Matrix labeled = path.design.values.leftCols(d);
    const auto traces = rmdee_traces(stats, include_labeled ? &labeled : nullptr, path.at(d).ridge_lambda);
    auto est = make_estimate(path, d, median(traces));
    est.ill_conditioned = stats.any_ill_conditioned();
    return est;
}

CorrectionEstimate rmdee(const ModelPath& path, const BlockPartition& blocks, const Matrix& labeled_X, int d,
                         double ridge, bool include_labeled) {
    const BlockStats stats(blocks, path.design.basis, d, ridge);
    const Matrix labeled = build_design(path.design.basis, labeled_X, d).values;
    const auto traces = rmdee_traces(stats, include_labeled ? &labeled : nullptr, ridge);
    auto est = make_estimate(path, d, median(traces));
    est.ill_conditioned = stats.any_ill_conditioned();
    return est;
}

// ---------------------------------------------------------------------------

Selection select_model(std::span<const double> risks) {
    if (risks.empty()) throw std::invalid_argument("select_model: no candidates");
    Selection s;
    double best = std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t i = 0; i < risks.size(); ++i) {
        const double r = std::isnan(risks[i]) ? std::numeric_limits<double>::infinity() : risks[i];
        if (r < best) {
            best = r;
            s.d_hat = static_cast<int>(i) + 1;
            found = true;
        }
    }
    if (!found) {
        s.d_hat = 1;
        s.all_infinite = true;
    }
    return s;
}

Selection select_model(std::span<const CorrectionEstimate> estimates) {
    std::vector<double> risks;
    risks.reserve(estimates.size());
    for (const auto& e : estimates) risks.push_back(e.risk);
    return select_model(risks);
}

}  // namespace dee
