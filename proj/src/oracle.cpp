#include "dee/oracle.hpp"

#include "dee/rng.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace dee {

namespace {

enum Purpose : std::uint64_t { kPopulation = 11, kRiskRep = 12, kTraceRep = 13, kPoolRep = 14, kMomentBlock = 15 };

Vector truth_of(const OracleConfig& cfg) {
    if (cfg.truth.size() == 0) return Vector::Ones(cfg.d);
    if (cfg.truth.size() != cfg.d) throw std::invalid_argument("oracle truth must have length d");
    return cfg.truth;
}

Matrix draw_covariates(const OracleConfig& cfg, Eigen::Index rows, Engine& rng) {
    std::normal_distribution<double> gauss;
    Matrix X(rows, cfg.basis.covariate_dim);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index m = 0; m < X.cols(); ++m) X(i, m) = cfg.covariate_sd * gauss(rng);
    return X;
}

// Welford accumulator for mean and variance.
struct Running {
    long long n = 0;
    double mean = 0.0, m2 = 0.0;
    void push(double x) {
        ++n;
        const double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
    }
    double var() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
    double se() const { return n > 0 ? std::sqrt(var() / static_cast<double>(n)) : 0.0; }
};

constexpr Eigen::Index kChunk = 100'000;

}  // namespace

Matrix mc_population_corr(const OracleConfig& cfg) {
    Engine rng = make_engine(cfg.seed, {kPopulation});
    Matrix sum = Matrix::Zero(cfg.d, cfg.d);
    for (Eigen::Index done = 0; done < cfg.c_draws; done += kChunk) {
        const auto rows = std::min<Eigen::Index>(kChunk, cfg.c_draws - done);
        const Matrix phi = build_design(cfg.basis, draw_covariates(cfg, rows, rng), cfg.d).values;
        sum.noalias() += phi.transpose() * phi;
    }
    Matrix c = sum / static_cast<double>(cfg.c_draws);
    return 0.5 * (c + c.transpose());
}

RiskRatioResult mc_risk_ratio(const OracleConfig& cfg) {
    if (cfg.reps < 2) throw std::invalid_argument("mc_risk_ratio needs at least two replications");
    const Vector alpha_star = truth_of(cfg);
    const Matrix C = mc_population_corr(cfg);

    // columns: true risk, empirical loss, Tr(C C_hat^{-1})
    Matrix samples(cfg.reps, 3);
    std::normal_distribution<double> gauss;
    for (int r = 0; r < cfg.reps; ++r) {
        Engine rng = make_engine(cfg.seed, {kRiskRep, static_cast<std::uint64_t>(r)});
        const DesignMatrix phi = build_design(cfg.basis, draw_covariates(cfg, cfg.n, rng), cfg.d);
        Vector y = phi.values * alpha_star;
        for (int i = 0; i < cfg.n; ++i) y(i) += cfg.noise_sd * gauss(rng);
        const FittedModel fit = ridge_lse(phi, y, cfg.ridge);

        const Matrix test_phi = build_design(cfg.basis, draw_covariates(cfg, cfg.test_points, rng), cfg.d).values;
        Vector resid = test_phi * (alpha_star - fit.alpha);
        for (Eigen::Index i = 0; i < resid.size(); ++i) resid(i) += cfg.noise_sd * gauss(rng);

        samples(r, 0) = resid.squaredNorm() / static_cast<double>(cfg.test_points);
        samples(r, 1) = fit.train_loss;
        samples(r, 2) = trace_of_product(C, design_inverse(phi.values, cfg.ridge));
    }

    const double reps = cfg.reps;
    const Eigen::RowVector3d mean = samples.colwise().mean();
    const Matrix centered = samples.rowwise() - mean;
    const Matrix cov = centered.transpose() * centered / (reps - 1.0);

    RiskRatioResult out;
    out.E_L = mean(0);
    out.E_LD = mean(1);
    out.mean_trace = mean(2);
    out.se_L = std::sqrt(cov(0, 0) / reps);
    out.se_LD = std::sqrt(cov(1, 1) / reps);
    out.se_trace = std::sqrt(cov(2, 2) / reps);
    const double shrink = 1.0 - static_cast<double>(cfg.d) / cfg.n;
    out.predicted = (1.0 + out.mean_trace / cfg.n) / shrink;
    out.degenerate = !(out.E_LD > 1e-12);
    if (out.degenerate) return out;

    out.ratio = out.E_L / out.E_LD;
    const Eigen::Vector3d g_ratio(1.0 / out.E_LD, -out.E_L / (out.E_LD * out.E_LD), 0.0);
    const Eigen::Vector3d g_diff = g_ratio - Eigen::Vector3d(0.0, 0.0, 1.0 / (cfg.n * shrink));
    out.se_ratio = std::sqrt(g_ratio.dot(cov * g_ratio) / reps);
    out.se_diff = std::sqrt(g_diff.dot(cov * g_diff) / reps);
    return out;
}

TraceTarget mc_trace_target(const OracleConfig& cfg) {
    if (cfg.reps < 100) throw std::invalid_argument("mc_trace_target needs at least 100 replications");
    TraceTarget out;
    out.C = mc_population_corr(cfg);

    std::vector<Matrix> inverses;
    inverses.reserve(static_cast<std::size_t>(cfg.reps));
    Matrix sum = Matrix::Zero(cfg.d, cfg.d);
    for (int r = 0; r < cfg.reps; ++r) {
        Engine rng = make_engine(cfg.seed, {kTraceRep, static_cast<std::uint64_t>(r)});
        const DesignMatrix phi = build_design(cfg.basis, draw_covariates(cfg, cfg.n, rng), cfg.d);
        inverses.push_back(design_inverse(phi.values, cfg.ridge));
        sum += inverses.back();
    }
    out.V = sum / static_cast<double>(cfg.reps);
    out.tr_CV = trace_of_product(out.C, out.V);

    Running per_rep;
    for (const auto& inv : inverses) per_rep.push(trace_of_product(out.C, inv));

    // Uncertainty of C: Tr(C_mc V) is the mean of phi^T V phi over the draws,
    // replayed from the same stream.
    Running per_draw;
    Engine rng = make_engine(cfg.seed, {kPopulation});
    for (Eigen::Index done = 0; done < cfg.c_draws; done += kChunk) {
        const auto rows = std::min<Eigen::Index>(kChunk, cfg.c_draws - done);
        const Matrix phi = build_design(cfg.basis, draw_covariates(cfg, rows, rng), cfg.d).values;
        const Vector q = ((phi * out.V).array() * phi.array()).rowwise().sum();
        for (Eigen::Index i = 0; i < q.size(); ++i) per_draw.push(q(i));
    }
    out.se = std::hypot(per_rep.se(), per_draw.se());
    return out;
}

HMoments mc_H_moments(const OracleConfig& cfg, CriterionKind variant, int B, int B1, const TraceTarget& target) {
    if (B < 2) throw std::invalid_argument("mc_H_moments needs B >= 2");
    if (cfg.reps < 2) throw std::invalid_argument("mc_H_moments needs at least two replications");
    std::vector<double> traces;
    traces.reserve(static_cast<std::size_t>(cfg.reps));
    for (int r = 0; r < cfg.reps; ++r) {
        Engine rng = make_engine(cfg.seed, {kPoolRep, static_cast<std::uint64_t>(r)});
        const Matrix pool = draw_covariates(cfg, static_cast<Eigen::Index>(B) * cfg.n, rng);
        const BlockStats stats(block_partition(UnlabeledSet{pool}, cfg.n), cfg.basis, cfg.d, cfg.ridge);
        traces.push_back(mdee_trace(stats, variant, B1));
    }

    Running acc;
    for (double t : traces) acc.push(t);
    double m4 = 0.0;
    for (double t : traces) m4 += std::pow(t - acc.mean, 4);
    m4 /= static_cast<double>(traces.size());

    HMoments out;
    out.mean = acc.mean;
    out.bias = acc.mean - target.tr_CV;
    out.var = acc.var();
    out.se_mean = acc.se();
    out.se_bias = std::hypot(out.se_mean, target.se);
    const double s2 = acc.m2 / static_cast<double>(traces.size());
    out.se_var = std::sqrt(std::max(0.0, m4 - s2 * s2) / static_cast<double>(traces.size()));
    return out;
}

namespace {

VarianceFormula formula_from(const Matrix& mu, const Matrix& nu, int B1, int B2) {
    const Vector mu_bar = mu.colwise().mean().transpose();
    const Vector nu_bar = nu.colwise().mean().transpose();
    const Matrix u = mu.rowwise() - mu_bar.transpose();
    const Matrix v = nu.rowwise() - nu_bar.transpose();
    const double denom = static_cast<double>(mu.rows() - 1);
    const Matrix var_mu = u.transpose() * u / denom;
    const Matrix var_nu = v.transpose() * v / denom;

    VarianceFormula f;
    f.tr_var_mu_var_nu = trace_of_product(var_mu, var_nu);
    f.tr_var_nu_mu_mu = mu_bar.dot(var_nu * mu_bar);
    f.tr_var_mu_nu_nu = nu_bar.dot(var_mu * nu_bar);
    f.value = f.tr_var_mu_var_nu / (static_cast<double>(B1) * B2) + f.tr_var_nu_mu_mu / B2 + f.tr_var_mu_nu_nu / B1;
    return f;
}

}  // namespace

VarianceFormula mc_variance_formula(const OracleConfig& cfg, int B1, int B2, int blocks, int batches) {
    if (B1 < 1 || B2 < 1) throw std::invalid_argument("block counts must be positive");
    if (batches < 2 || blocks < 2 * batches) throw std::invalid_argument("too few blocks for the batch SE");
    const int dd = cfg.d * cfg.d;
    Matrix mu(blocks, dd), nu(blocks, dd);
    for (int b = 0; b < blocks; ++b) {
        Engine rng = make_engine(cfg.seed, {kMomentBlock, static_cast<std::uint64_t>(b)});
        const Matrix phi = build_design(cfg.basis, draw_covariates(cfg, cfg.n, rng), cfg.d).values;
        mu.row(b) = correlation_matrix(phi).reshaped().transpose();
        nu.row(b) = design_inverse(phi, cfg.ridge).reshaped().transpose();
    }

    VarianceFormula out = formula_from(mu, nu, B1, B2);
    const int per_batch = blocks / batches;
    Running spread;
    for (int k = 0; k < batches; ++k)
        spread.push(formula_from(mu.middleRows(k * per_batch, per_batch), nu.middleRows(k * per_batch, per_batch), B1,
                                 B2)
                        .value);
    out.se = std::sqrt(spread.var() / batches);
    return out;
}

}  // namespace dee
