#pragma once

#include "dee/core.hpp"

#include <cstdint>
#include <string>

namespace dee {

enum class Target { sinc, step };

std::string to_string(Target target);
Target parse_target(const std::string& name);

/// sinc: sin(4x) / (4x) with the limit 1 at x = 0. step: 1 if x > 0 else 0.
double target_eval(Target target, double x);

struct SyntheticConfig {
    Target target = Target::sinc;
    int n = 10;
    int n_prime = 1500;
    int n_test = 1000;
    double noise_var = 0.1;
    double covariate_var = 1.0;
    std::uint64_t seed = 0;
};

struct SyntheticData {
    LabeledSet train;
    UnlabeledSet unlabeled;
    LabeledSet test;
};

/// Covariates x ~ N(0, covariate_var); responses f(x) + N(0, noise_var).
/// Training, unlabeled and test parts each draw from their own stream of the
/// seed, one point at a time, so enlarging a part only appends to it.
SyntheticData generate(const SyntheticConfig& cfg);

}  // namespace dee
