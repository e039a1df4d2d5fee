#pragma once

#include "dee/core.hpp"
#include "dee/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dee {

enum class BaselineKind { FPE, cAIC, CV5, ADJ };

std::string to_string(BaselineKind kind);

/// Akaike's final prediction error, L_D (n + d) / (n - d). +inf when d >= n.
double fpe(double train_loss, int n, int d);

/// Small-sample corrected AIC, n ln L_D + n (n + d) / (n - d - 2).
/// +inf when n - d - 2 <= 0 or L_D <= 0.
double caic(double train_loss, int n, int d);

/// Fold label in [0, k) per row: a seeded random permutation dealt
/// round-robin, so fold sizes differ by at most one.
std::vector<int> kfold_assignment(int n, int k, Engine& rng);

/// Mean over folds of the held-out mean squared error. A fold whose fit fails
/// makes the whole score +inf.
double kfold_cv(const LabeledSet& data, const BasisSpec& basis, int d, const std::vector<int>& folds, int k,
                double ridge);
double kfold_cv(const LabeledSet& data, const BasisSpec& basis, int d, int k, double ridge, std::uint64_t seed);

/// Metric-based ADJ for every d = 1..d_max of the path:
/// L_D(d) * max_{j < d} rho_U(f_j, f_d) / rho_L(f_j, f_d), where rho_S is the
/// root mean squared difference of predictions over S. Ratios whose labeled
/// distance is below 1e-12 are skipped; an empty max counts as 1.
std::vector<double> adj_all(const ModelPath& path, const Matrix& labeled_X, const UnlabeledSet& unlabeled);
double adj(const ModelPath& path, const Matrix& labeled_X, const UnlabeledSet& unlabeled, int d);

/// Same quantity given prediction matrices (column d-1 = predictions of f_d).
std::vector<double> adj_from_predictions(const ModelPath& path, const Matrix& labeled_pred,
                                         const Matrix& unlabeled_pred);

/// Predictions of every model in the path on the rows of X (rows x d_max).
Matrix path_predictions(const ModelPath& path, const Matrix& X);

}  // namespace dee
