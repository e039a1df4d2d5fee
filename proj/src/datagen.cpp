#include "dee/datagen.hpp"

#include "dee/rng.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace dee {

std::string to_string(Target target) { return target == Target::sinc ? "sinc" : "step"; }

Target parse_target(const std::string& name) {
    if (name == "sinc") return Target::sinc;
    if (name == "step") return Target::step;
    throw std::invalid_argument("unknown target function '" + name + "'");
}

double target_eval(Target target, double x) {
    switch (target) {
        case Target::sinc: return x == 0.0 ? 1.0 : std::sin(4.0 * x) / (4.0 * x);
        case Target::step: return x > 0.0 ? 1.0 : 0.0;
    }
    return 0.0;
}

namespace {

enum Stream : std::uint64_t { kTrain = 1, kUnlabeled = 2, kTest = 3 };

LabeledSet draw_labeled(const SyntheticConfig& cfg, int count, Stream stream) {
    Engine rng = make_engine(cfg.seed, {stream});
    std::normal_distribution<double> gauss;
    const double cov_sd = std::sqrt(cfg.covariate_var), noise_sd = std::sqrt(cfg.noise_var);
    LabeledSet out{Matrix(count, 1), Vector(count)};
    for (int i = 0; i < count; ++i) {
        const double x = cov_sd * gauss(rng);
        const double xi = noise_sd * gauss(rng);
        out.X(i, 0) = x;
        out.y(i) = target_eval(cfg.target, x) + xi;
    }
    return out;
}

}  // namespace

SyntheticData generate(const SyntheticConfig& cfg) {
    if (cfg.n < 0 || cfg.n_prime < 0 || cfg.n_test < 0) throw std::invalid_argument("negative sample count");
    if (cfg.noise_var < 0.0) throw std::invalid_argument("noise variance must be >= 0");
    if (!(cfg.covariate_var > 0.0)) throw std::invalid_argument("covariate variance must be > 0");

    SyntheticData data;
    data.train = draw_labeled(cfg, cfg.n, kTrain);
    data.test = draw_labeled(cfg, cfg.n_test, kTest);

    Engine rng = make_engine(cfg.seed, {kUnlabeled});
    std::normal_distribution<double> gauss;
    const double cov_sd = std::sqrt(cfg.covariate_var);
    data.unlabeled.X.resize(cfg.n_prime, 1);
    for (int j = 0; j < cfg.n_prime; ++j) data.unlabeled.X(j, 0) = cov_sd * gauss(rng);
    return data;
}

}  // namespace dee
