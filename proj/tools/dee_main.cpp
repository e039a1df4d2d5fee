// Command-line front end: run experiments, run the Monte-Carlo checks, and
// re-aggregate trial files.

#include "dee/harness.hpp"
#include "dee/oracle.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

void print(const char* key, double value) { std::cout << key << ": " << dee::format_value(value) << '\n'; }

int run_oracle_theorem2(int reps, std::uint64_t seed) {
    dee::OracleConfig cfg;
    cfg.d = 3;
    cfg.n = 20;
    cfg.noise_sd = 1.0;
    cfg.truth = Eigen::Vector3d(0.5, 1.0, -0.7);
    cfg.reps = reps;
    cfg.seed = seed;
    const auto r = dee::mc_risk_ratio(cfg);
    const double expected_ld = cfg.noise_sd * cfg.noise_sd * (cfg.n - cfg.d) / cfg.n;
    std::cout << "theorem: 2\n";
    print("n", cfg.n);
    print("d", cfg.d);
    print("reps", cfg.reps);
    print("E_L", r.E_L);
    print("E_LD", r.E_LD);
    print("E_LD_expected", expected_ld);
    print("se_LD", r.se_LD);
    print("ratio", r.ratio);
    print("predicted_ratio", r.predicted);
    print("mean_trace_C_Chat_inv", r.mean_trace);
    print("se_diff", r.se_diff);
    print("relative_gap", std::abs(r.ratio - r.predicted) / r.predicted);
    return 0;
}

int run_oracle_theorem4(int reps, std::uint64_t seed) {
    dee::OracleConfig cfg;
    cfg.d = 3;
    cfg.n = 20;
    cfg.seed = seed;
    const int B = 30, B1 = 10;

    dee::OracleConfig target_cfg = cfg;
    target_cfg.reps = 200'000;
    const auto target = dee::mc_trace_target(target_cfg);

    cfg.reps = reps;
    std::cout << "theorem: 4\n";
    print("B", B);
    print("B1", B1);
    print("tr_CV", target.tr_CV);
    print("se_tr_CV", target.se);
    print("bias_closed_form_mDEE2_3", (cfg.d - target.tr_CV) / B);
    for (auto variant : {dee::CriterionKind::mDEE1, dee::CriterionKind::mDEE2, dee::CriterionKind::mDEE3}) {
        const auto m = dee::mc_H_moments(cfg, variant, B, B1, target);
        const std::string name = dee::to_string(variant);
        std::cout << name << ":\n";
        std::cout << "  bias: " << dee::format_value(m.bias) << "\n  se_bias: " << dee::format_value(m.se_bias)
                  << "\n  var: " << dee::format_value(m.var) << "\n  se_var: " << dee::format_value(m.se_var) << '\n';
    }
    const auto formula = dee::mc_variance_formula(cfg, B1, B - B1, 100'000);
    print("var_mDEE1_closed_form", formula.value);
    print("se_var_closed_form", formula.se);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Risk-estimator model selection experiments"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run an experiment from a config file");
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> reps;
    std::optional<std::string> out_dir;
    std::optional<int> threads;
    run->add_option("config", config_path, "Experiment config (YAML)")->required()->check(CLI::ExistingFile);
    run->add_option("--seed", seed, "Override master_seed");
    run->add_option("--reps", reps, "Override repetitions")->check(CLI::PositiveNumber);
    run->add_option("--out", out_dir, "Override output directory");
    run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

    auto* oracle = app.add_subcommand("oracle", "Monte-Carlo checks of the correction factor and Tr(H) moments");
    int theorem = 2;
    int oracle_reps = 0;
    std::uint64_t oracle_seed = 2014;
    oracle->add_option("--theorem", theorem, "2: risk ratio, 4: bias and variance of Tr(H)")
        ->check(CLI::IsMember({2, 4}));
    oracle->add_option("--reps", oracle_reps, "Replications (default 20000 for 2, 10000 for 4)");
    oracle->add_option("--seed", oracle_seed, "Seed");

    auto* report = app.add_subcommand("report", "Re-aggregate a trials.csv file into a summary");
    std::string trials_path;
    std::string summary_path;
    report->add_option("trials", trials_path, "trials.csv written by 'run'")->required()->check(CLI::ExistingFile);
    report->add_option("--out", summary_path, "Write the summary here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            auto cfg = dee::load_config(config_path);
            if (seed) cfg.master_seed = *seed;
            if (reps) cfg.repetitions = *reps;
            if (out_dir) cfg.output_dir = *out_dir;
            if (threads) cfg.threads = *threads;
            const auto result = dee::run_experiment(cfg);
            dee::write_outputs(cfg, result);
            dee::write_summary_csv(std::cout, result.summary);
            return 0;
        }
        if (*oracle) {
            if (theorem == 2) return run_oracle_theorem2(oracle_reps > 0 ? oracle_reps : 20'000, oracle_seed);
            return run_oracle_theorem4(oracle_reps > 0 ? oracle_reps : 10'000, oracle_seed);
        }
        if (*report) {
            std::ifstream in(trials_path);
            const auto rows = dee::summarize_trials_csv(in);
            if (summary_path.empty()) {
                dee::write_summary_csv(std::cout, rows);
            } else {
                std::ofstream out(summary_path, std::ios::binary);
                dee::write_summary_csv(out, rows);
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
