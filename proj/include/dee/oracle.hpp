#pragma once

#include "dee/core.hpp"
#include "dee/estimators.hpp"

#include <cstdint>

namespace dee {

/// Monte-Carlo setting with the regression truth inside the model, so the
/// residual of the best in-model predictor is pure noise and independent of
/// the design.
struct OracleConfig {
    BasisSpec basis;
    int d = 3;
    int n = 20;
    double noise_sd = 1.0;
    double covariate_sd = 1.0;
    Vector truth;  // length d; empty means all ones
    int reps = 1000;
    std::uint64_t seed = 1;
    double ridge = kDefaultRidge;
    int test_points = 10'000;      // fresh test sample per replication
    int c_draws = 1'000'000;       // draws for the population correlation C
};

/// Population correlation C = E[phi(x) phi(x)^T] estimated from cfg.c_draws
/// covariate draws.
Matrix mc_population_corr(const OracleConfig& cfg);

struct RiskRatioResult {
    double E_L = 0.0;        // mean true risk over replications
    double E_LD = 0.0;       // mean empirical loss
    double se_L = 0.0;
    double se_LD = 0.0;
    double ratio = 0.0;      // E_L / E_LD
    double se_ratio = 0.0;
    double mean_trace = 0.0; // mean Tr(C C_hat^{-1})
    double se_trace = 0.0;
    double predicted = 0.0;  // (1 + mean_trace / n) / (1 - d / n)
    double se_diff = 0.0;    // delta-method SE of ratio - predicted
    bool degenerate = false; // E_LD too small for the ratio to mean anything
};

RiskRatioResult mc_risk_ratio(const OracleConfig& cfg);

struct TraceTarget {
    double tr_CV = 0.0;
    double se = 0.0;
    Matrix C;
    Matrix V;
};

/// Tr(C E[C_hat^{-1}]) with both C and E[C_hat^{-1}] estimated by simulation.
TraceTarget mc_trace_target(const OracleConfig& cfg);

struct HMoments {
    double mean = 0.0;
    double bias = 0.0;  // mean - target.tr_CV
    double var = 0.0;
    double se_mean = 0.0;
    double se_bias = 0.0;  // includes the SE of the target
    double se_var = 0.0;
};

/// Samples cfg.reps pools of B * n unlabeled rows and reports the moments of
/// Tr(H) for mDEE1..3 against the supplied target.
HMoments mc_H_moments(const OracleConfig& cfg, CriterionKind variant, int B, int B1, const TraceTarget& target);

struct VarianceFormula {
    double value = 0.0;
    double se = 0.0;
    double tr_var_mu_var_nu = 0.0;
    double tr_var_nu_mu_mu = 0.0;
    double tr_var_mu_nu_nu = 0.0;
};

/// Closed-form Var(Tr(H_1)) for block counts (B1, B2), with mu, nu, Var(mu_hat)
/// and Var(nu_hat) estimated from `blocks` independent size-n blocks. The SE
/// comes from recomputing the formula on `batches` disjoint batches.
VarianceFormula mc_variance_formula(const OracleConfig& cfg, int B1, int B2, int blocks, int batches = 20);

}  // namespace dee
