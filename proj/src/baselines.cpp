#include "dee/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace dee {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinDistance = 1e-12;
}  // namespace

std::string to_string(BaselineKind kind) {
    switch (kind) {
        case BaselineKind::FPE: return "FPE";
        case BaselineKind::cAIC: return "cAIC";
        case BaselineKind::CV5: return "CV5";
        case BaselineKind::ADJ: return "ADJ";
    }
    return "?";
}

double fpe(double train_loss, int n, int d) {
    if (d >= n) return kInf;
    return train_loss * static_cast<double>(n + d) / static_cast<double>(n - d);
}

double caic(double train_loss, int n, int d) {
    if (n - d - 2 <= 0 || !(train_loss > 0.0)) return kInf;
    const double nn = static_cast<double>(n);
    return nn * std::log(train_loss) + nn * static_cast<double>(n + d) / static_cast<double>(n - d - 2);
}

std::vector<int> kfold_assignment(int n, int k, Engine& rng) {
    if (k < 2 || n < k) throw std::invalid_argument("k-fold needs 2 <= k <= n");
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> folds(static_cast<std::size_t>(n));
    for (int pos = 0; pos < n; ++pos) folds[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = pos % k;
    return folds;
}

double kfold_cv(const LabeledSet& data, const BasisSpec& basis, int d, const std::vector<int>& folds, int k,
                double ridge) {
    data.validate();
    const auto n = data.size();
    if (static_cast<Eigen::Index>(folds.size()) != n) throw std::invalid_argument("fold labels do not match rows");
    const DesignMatrix design = build_design(basis, data.X, d);

    double total = 0.0;
    for (int f = 0; f < k; ++f) {
        std::vector<Eigen::Index> train, held;
        for (Eigen::Index i = 0; i < n; ++i) (folds[static_cast<std::size_t>(i)] == f ? held : train).push_back(i);
        if (held.empty() || train.empty()) throw std::invalid_argument("empty fold");

        const DesignMatrix phi_train{design.values(train, Eigen::all), basis};
        const Vector y_train = data.y(train);
        FittedModel fit;
        try {
            fit = ridge_lse(phi_train, y_train, ridge);
        } catch (const DegenerateDesign&) {
            return kInf;
        }
        const Vector resid = data.y(held) - design.values(held, Eigen::all) * fit.alpha;
        total += resid.squaredNorm() / static_cast<double>(held.size());
    }
    return total / k;
}

double kfold_cv(const LabeledSet& data, const BasisSpec& basis, int d, int k, double ridge, std::uint64_t seed) {
    Engine rng(seed);
    return kfold_cv(data, basis, d, kfold_assignment(static_cast<int>(data.size()), k, rng), k, ridge);
}

Matrix path_predictions(const ModelPath& path, const Matrix& X) {
    const Matrix design = build_design(path.design.basis, X, path.d_max).values;
    Matrix pred(X.rows(), path.d_max);
    for (int d = 1; d <= path.d_max; ++d) pred.col(d - 1) = design.leftCols(d) * path.at(d).alpha;
    return pred;
}

std::vector<double> adj_from_predictions(const ModelPath& path, const Matrix& labeled_pred,
                                         const Matrix& unlabeled_pred) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(path.d_max));
    for (int d = 1; d <= path.d_max; ++d) {
        double worst = -kInf;
        for (int j = 1; j < d; ++j) {
            const double rho_l = std::sqrt((labeled_pred.col(j - 1) - labeled_pred.col(d - 1)).squaredNorm() /
                                           static_cast<double>(labeled_pred.rows()));
            if (rho_l < kMinDistance) continue;
            const double rho_u = std::sqrt((unlabeled_pred.col(j - 1) - unlabeled_pred.col(d - 1)).squaredNorm() /
                                           static_cast<double>(unlabeled_pred.rows()));
            worst = std::max(worst, rho_u / rho_l);
        }
        const double factor = (worst == -kInf) ? 1.0 : worst;
        out.push_back(path.at(d).train_loss * factor);
    }
    return out;
}

std::vector<double> adj_all(const ModelPath& path, const Matrix& labeled_X, const UnlabeledSet& unlabeled) {
    if (unlabeled.size() < 1) throw std::invalid_argument("ADJ needs unlabeled rows");
    return adj_from_predictions(path, path_predictions(path, labeled_X), path_predictions(path, unlabeled.X));
}

double adj(const ModelPath& path, const Matrix& labeled_X, const UnlabeledSet& unlabeled, int d) {
    if (d < 1 || d > path.d_max) throw std::out_of_range("ADJ: model size outside path");
    return adj_all(path, labeled_X, unlabeled)[static_cast<std::size_t>(d - 1)];
}

}  // namespace dee
