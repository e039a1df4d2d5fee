#include "dee/harness.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace dee;
namespace fs = std::filesystem;

namespace {

const BasisSpec kFourier1{BasisKind::fourier, 1};

ExperimentConfig small_config(int threads = 1) {
    SyntheticScenario s;
    s.target = Target::step;
    s.n = {10, 20};
    s.noise_var = {0.1, 0.3};
    s.n_prime = 300;
    s.n_test = 200;
    ExperimentConfig cfg;
    cfg.name = "small";
    cfg.scenario = s;
    cfg.criteria = all_criteria();
    cfg.repetitions = 6;
    cfg.master_seed = 77;
    cfg.threads = threads;
    return cfg;
}

std::string trials_text(const ExperimentResult& r) {
    std::ostringstream out;
    write_trials_csv(out, r);
    return out.str();
}

std::string summary_text(const std::vector<SummaryRow>& rows) {
    std::ostringstream out;
    write_summary_csv(out, rows);
    return out.str();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path temp_dir(const char* tag) {
    std::random_device rd;
    auto p = fs::temp_directory_path() / (std::string("dee_") + tag + "_" + std::to_string(rd()));
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST(TestError, Examples) {
    const LabeledSet test{Matrix::Zero(3, 1), Vector::Constant(3, 1.0)};
    const FittedModel exact{1, Vector::Constant(1, 1.0), 0.0, 0.0};
    EXPECT_DOUBLE_EQ(test_error(exact, test, kFourier1), 0.0);

    // constant column equals M, so alpha = (c) predicts M c
    const BasisSpec two{BasisKind::fourier, 2};
    Engine rng(1);
    const LabeledSet t2{dee::testing::gaussian_matrix(5, 2, rng), Vector::Constant(5, 2.0 * 0.75)};
    EXPECT_NEAR(test_error({1, Vector::Constant(1, 0.75), 0.0, 0.0}, t2, two), 0.0, 1e-15);
}

TEST(TestError, MatchesNaiveLoop) {
    Engine rng(2);
    const LabeledSet test{dee::testing::gaussian_matrix(40, 1, rng), dee::testing::gaussian_vector(40, rng)};
    const FittedModel m{4, dee::testing::gaussian_vector(4, rng), 0.0, 0.0};
    double sum = 0.0;
    for (Eigen::Index i = 0; i < 40; ++i) {
        double pred = 0.0;
        for (int k = 1; k <= 4; ++k) pred += m.alpha(k - 1) * basis_eval(kFourier1, k, test.X(i, 0));
        sum += (test.y(i) - pred) * (test.y(i) - pred);
    }
    EXPECT_NEAR(test_error(m, test, kFourier1), sum / 40.0, 1e-12);
}

TEST(Regret, Examples) {
    EXPECT_DOUBLE_EQ(regret({1.0, 0.5, 0.8}, 2), 0.0);
    EXPECT_NEAR(regret({1.0, 0.5, 0.8}, 3), std::log(1.6), 1e-15);
    EXPECT_NEAR(regret({1.0, 0.5, 0.8}, 3), 0.4700, 1e-4);
    EXPECT_DOUBLE_EQ(regret({0.5, 0.5}, 1), 0.0);
    EXPECT_DOUBLE_EQ(regret({0.5, 0.5}, 2), 0.0);
    EXPECT_THROW(regret({0.5, 0.0}, 1), std::domain_error);
    EXPECT_THROW(regret({0.5, 0.4}, 3), std::out_of_range);
}

TEST(Aggregate, Examples) {
    auto a = aggregate({1.0, 2.0, 3.0});
    EXPECT_DOUBLE_EQ(a.median, 2.0);
    EXPECT_DOUBLE_EQ(a.q1, 1.5);
    EXPECT_DOUBLE_EQ(a.q3, 2.5);
    EXPECT_DOUBLE_EQ(a.iqr, 1.0);
    EXPECT_EQ(a.n_trials, 3);
    a = aggregate({5.0});
    EXPECT_DOUBLE_EQ(a.median, 5.0);
    EXPECT_DOUBLE_EQ(a.iqr, 0.0);
    EXPECT_DOUBLE_EQ(aggregate({0.3, 0.3, 0.3, 0.3}).iqr, 0.0);
    a = aggregate({3.0, std::nan(""), 1.0, std::numeric_limits<double>::infinity()});
    EXPECT_EQ(a.n_trials, 2);
    EXPECT_DOUBLE_EQ(a.median, 2.0);
}

TEST(Aggregate, QuantileInterpolation) {
    const std::vector<double> s{0.0, 10.0, 20.0, 30.0, 40.0};
    EXPECT_DOUBLE_EQ(quantile_sorted(s, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(quantile_sorted(s, 1.0), 40.0);
    EXPECT_DOUBLE_EQ(quantile_sorted(s, 0.1), 4.0);
    EXPECT_DOUBLE_EQ(quantile_sorted(s, 0.5), 20.0);
}

TEST(Criteria, NamesRoundTrip) {
    for (const auto& c : all_criteria()) EXPECT_EQ(parse_criterion(to_string(c)), c);
    EXPECT_EQ(parse_criterion("cv"), Criterion(BaselineKind::CV5));
    EXPECT_EQ(parse_criterion("mdee1"), Criterion(CriterionKind::mDEE1));
    EXPECT_EQ(parse_criterion("CAIC"), Criterion(BaselineKind::cAIC));
    EXPECT_THROW(parse_criterion("bic"), std::invalid_argument);
    EXPECT_EQ(all_criteria().size(), 9U);
}

TEST(DmaxRule, Resolve) {
    DmaxRule paper;
    EXPECT_EQ(paper.resolve(10, 1, true), 8);
    EXPECT_EQ(paper.resolve(20, 1, true), 15);
    EXPECT_EQ(paper.resolve(50, 1, true), 23);
    EXPECT_EQ(paper.resolve(20, 7, false), 3);
    DmaxRule formula{DmaxRule::Kind::formula, 0};
    EXPECT_EQ(formula.resolve(10, 1, true), 9);
    DmaxRule fixed{DmaxRule::Kind::fixed, 4};
    EXPECT_EQ(fixed.resolve(50, 8, false), 4);
}

TEST(Config, ParsesSyntheticScenario) {
    const auto cfg = parse_config(R"(
name: demo
master_seed: 9
repetitions: 12
d_max: 5
criteria: [FPE, cv, mDEE1, rmDEE]
threads: 3
scenario:
  synthetic:
    target: step
    n: [10, 20]
    noise_var: 0.2
    n_prime: 400
output:
  dir: out/demo
)");
    EXPECT_EQ(cfg.name, "demo");
    EXPECT_EQ(cfg.master_seed, 9U);
    EXPECT_EQ(cfg.repetitions, 12);
    EXPECT_EQ(cfg.d_max.kind, DmaxRule::Kind::fixed);
    EXPECT_EQ(cfg.d_max.fixed, 5);
    EXPECT_EQ(cfg.criteria.size(), 4U);
    EXPECT_EQ(cfg.threads, 3);
    EXPECT_EQ(cfg.output_dir, "out/demo");
    const auto& s = std::get<SyntheticScenario>(cfg.scenario);
    EXPECT_EQ(s.target, Target::step);
    EXPECT_EQ(s.n, (std::vector<int>{10, 20}));
    EXPECT_EQ(s.noise_var, (std::vector<double>{0.2}));
    EXPECT_EQ(s.n_prime, 400);
    EXPECT_EQ(s.n_test, 1000);
}

TEST(Config, DefaultsAndErrors) {
    const auto cfg = parse_config("scenario: {synthetic: {target: sinc}}");
    EXPECT_EQ(cfg.criteria.size(), all_criteria().size());
    EXPECT_EQ(cfg.d_max.kind, DmaxRule::Kind::paper);

    EXPECT_THROW(parse_config("name: x"), std::invalid_argument);
    EXPECT_THROW(parse_config("scenario: {synthetic: {target: cubic}}"), std::invalid_argument);
    EXPECT_THROW(parse_config("repetitions: 0\nscenario: {synthetic: {target: sinc}}"), std::invalid_argument);
    EXPECT_THROW(parse_config("d_max: 10\nscenario: {synthetic: {target: sinc, n: [10]}}"), std::invalid_argument);
    EXPECT_THROW(parse_config("d_max: lots\nscenario: {synthetic: {target: sinc}}"), std::invalid_argument);
    EXPECT_THROW(parse_config("scenario: [unbalanced"), std::invalid_argument);
}

TEST(Config, ShippedConfigsLoad) {
    for (const auto& entry : fs::directory_iterator(fs::path(DEE_SOURCE_DIR) / "configs")) {
        if (entry.path().extension() != ".yaml") continue;
        EXPECT_NO_THROW(load_config(entry.path().string())) << entry.path();
    }
    const auto real = load_config(std::string(DEE_SOURCE_DIR) + "/configs/real_abalone.yaml");
    EXPECT_EQ(std::get<RealScenario>(real.scenario).dataset.n_prime, 1300);
}

TEST(ExpandCells, SyntheticOrder) {
    const auto cells = expand_cells(small_config());
    ASSERT_EQ(cells.size(), 4U);
    EXPECT_EQ(cells[0].n, 10);
    EXPECT_DOUBLE_EQ(*cells[0].noise_var, 0.1);
    EXPECT_EQ(cells[1].n, 10);
    EXPECT_DOUBLE_EQ(*cells[1].noise_var, 0.3);
    EXPECT_EQ(cells[2].n, 20);
    for (std::size_t i = 0; i < cells.size(); ++i) EXPECT_EQ(cells[i].index, static_cast<int>(i));
}

TEST(RunTrial, NoiselessNestedTruthHasZeroRegret) {
    // Training responses come exactly from a d = 2 model; the test set adds noise
    // so test errors stay positive.
    Engine rng(3);
    auto truth = [](double x) { return 0.4 + 0.9 * basis_eval(kFourier1, 2, x); };
    TrialData data;
    data.train.X = dee::testing::gaussian_matrix(20, 1, rng);
    data.train.y = data.train.X.col(0).unaryExpr(truth);
    data.unlabeled.X = dee::testing::gaussian_matrix(500, 1, rng);
    data.test.X = dee::testing::gaussian_matrix(1000, 1, rng);
    data.test.y = data.test.X.col(0).unaryExpr(truth) + dee::testing::gaussian_vector(1000, rng, 0.3);

    TrialOptions opts{kFourier1, 8, 1e-9, 5, true, 5};
    const auto r = run_trial(data, all_criteria(), opts);
    ASSERT_EQ(r.test_errors.size(), 8U);
    ASSERT_EQ(r.outcomes.size(), all_criteria().size());
    for (const auto& o : r.outcomes) {
        EXPECT_EQ(o.risks.size(), 8U);
        EXPECT_GE(o.d_hat, 2) << to_string(o.criterion);
        EXPECT_LE(o.regret, 1e-6) << to_string(o.criterion);
    }
}

TEST(RunTrial, RecordsB1AndRegretConsistency) {
    SyntheticConfig sc{Target::sinc, 10, 500, 300, 0.2, 1.0, 12};
    const auto g = generate(sc);
    const TrialData data{g.train, g.unlabeled, g.test};
    const auto r = run_trial(data, all_criteria(), {kFourier1, 8, 1e-9, 5, true, 3});
    for (const auto& o : r.outcomes) {
        if (std::isfinite(o.regret)) EXPECT_DOUBLE_EQ(o.regret, regret(r.test_errors, o.d_hat));
        const bool split = o.criterion == Criterion(CriterionKind::mDEE1) || o.criterion == Criterion(CriterionKind::mDEE2);
        EXPECT_EQ(o.b1.has_value(), split) << to_string(o.criterion);
        if (o.b1) {
            EXPECT_GE(*o.b1, 1);
            EXPECT_LE(*o.b1, 500 / 10 - 1);
            EXPECT_NE(o.flag_string().find("b1=" + std::to_string(*o.b1)), std::string::npos);
        }
    }
}

TEST(RunExperiment, DeterministicAndThreadIndependent) {
    const auto a = run_experiment(small_config(1));
    const auto b = run_experiment(small_config(1));
    const auto c = run_experiment(small_config(4));
    EXPECT_EQ(trials_text(a), trials_text(b));
    EXPECT_EQ(trials_text(a), trials_text(c));
    EXPECT_EQ(summary_text(a.summary), summary_text(c.summary));
    ASSERT_EQ(a.trials.size(), 4U * 6U);
    for (std::size_t i = 0; i < a.trials.size(); ++i) {
        EXPECT_EQ(a.trials[i].cell, static_cast<int>(i / 6));
        EXPECT_EQ(a.trials[i].trial, static_cast<int>(i % 6));
    }

    auto other = small_config();
    other.master_seed = 78;
    EXPECT_NE(trials_text(run_experiment(other)), trials_text(a));
}

TEST(RunExperiment, ReportReproducesSummary) {
    const auto r = run_experiment(small_config());
    std::istringstream trials(trials_text(r));
    EXPECT_EQ(summary_text(summarize_trials_csv(trials)), summary_text(r.summary));
    EXPECT_EQ(r.summary.size(), 4U * all_criteria().size());
}

TEST(RunExperiment, WritesOutputs) {
    const auto dir = temp_dir("out");
    auto cfg = small_config();
    cfg.output_dir = (dir / "run").string();
    cfg.notes = "unit test";
    const auto r = run_experiment(cfg);
    write_outputs(cfg, r);
    for (const char* f : {"summary.csv", "trials.csv", "test_errors.csv", "metadata.yaml"})
        EXPECT_TRUE(fs::exists(dir / "run" / f)) << f;
    const auto summary = slurp(dir / "run" / "summary.csv");
    EXPECT_EQ(summary.substr(0, summary.find('\n')), "scenario,n,noise_var,criterion,median,iqr,n_trials");
    EXPECT_NE(slurp(dir / "run" / "metadata.yaml").find("unit test"), std::string::npos);

    std::ifstream trials(dir / "run" / "trials.csv");
    EXPECT_EQ(summary_text(summarize_trials_csv(trials)), summary);
    fs::remove_all(dir);
}

TEST(RunExperiment, RealDataScenario) {
    const auto dir = temp_dir("real");
    {
        std::ofstream out(dir / "toy.csv");
        out << "a,b,target\n";
        Engine rng(4);
        std::normal_distribution<double> g;
        for (int i = 0; i < 300; ++i) {
            const double a = g(rng), b = g(rng);
            out << a << ',' << b << ',' << std::sin(a) + 0.5 * b + 0.1 * g(rng) << '\n';
        }
    }
    const auto cfg = parse_config(R"(
repetitions: 3
scenario:
  real:
    dataset: {name: toy, path: toy.csv, response_column: target, n_prime: 150}
    n: [20]
)",
                                  dir.string());
    const auto r = run_experiment(cfg);
    ASSERT_EQ(r.cells.size(), 1U);
    EXPECT_EQ(r.cells[0].scenario, "toy");
    EXPECT_FALSE(r.cells[0].noise_var.has_value());
    ASSERT_EQ(r.trials.size(), 3U);
    EXPECT_EQ(r.trials[0].test_errors.size(), 10U);  // ceil(19 / 2)
    std::istringstream trials(trials_text(r));
    EXPECT_EQ(summary_text(summarize_trials_csv(trials)), summary_text(r.summary));
    EXPECT_NE(trials_text(r).find("toy,20,,0,"), std::string::npos);
    fs::remove_all(dir);
}

TEST(Report, RejectsForeignFiles) {
    std::istringstream bad("a,b\n1,2\n");
    EXPECT_THROW(summarize_trials_csv(bad), ParseError);
}

TEST(FormatValue, SixSignificantDigits) {
    EXPECT_EQ(format_value(0.123456789), "0.123457");
    EXPECT_EQ(format_value(std::numeric_limits<double>::infinity()), "inf");
    EXPECT_EQ(format_value(std::nan("")), "nan");
    EXPECT_EQ(format_value(0.0), "0");
}
