#pragma once

#include "dee/baselines.hpp"
#include "dee/core.hpp"
#include "dee/datagen.hpp"
#include "dee/estimators.hpp"
#include "dee/ingest.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace dee {

/// Any model selection criterion the harness can run.
using Criterion = std::variant<BaselineKind, CriterionKind>;

std::string to_string(const Criterion& c);
Criterion parse_criterion(const std::string& name);
const std::vector<Criterion>& all_criteria();

// ---------------------------------------------------------------------------
// Configuration

struct SyntheticScenario {
    Target target = Target::sinc;
    std::vector<int> n{10};
    std::vector<double> noise_var{0.1};
    int n_prime = 1500;
    int n_test = 1000;
    double covariate_var = 1.0;
};

struct RealScenario {
    DatasetManifest dataset;
    std::vector<int> n{20};
    bool standardize = true;
};

/// How many candidate models a cell gets.
struct DmaxRule {
    enum class Kind { paper, formula, fixed } kind = Kind::paper;
    int fixed = 0;

    /// paper: 8, 15, 23 for synthetic n = 10, 20, 50 and ceil((n-1)/M) for
    /// real data; formula: always ceil((n-1)/M); fixed: the stored value.
    int resolve(int n, int covariate_dim, bool synthetic) const;
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::variant<SyntheticScenario, RealScenario> scenario;
    std::vector<Criterion> criteria;
    int repetitions = 1000;
    DmaxRule d_max;
    double ridge = kDefaultRidge;
    std::uint64_t master_seed = 1;
    std::string output_dir = "results";
    int threads = 1;
    int cv_folds = 5;
    bool rmdee_include_labeled = true;
    std::string notes;

    /// Throws std::invalid_argument on an inconsistent configuration.
    void validate() const;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& yaml_text, const std::string& base_dir = ".");
DatasetManifest load_manifest(const std::string& path);

// ---------------------------------------------------------------------------
// Trials

/// One grid point of the experiment.
struct Cell {
    int index = 0;
    std::string scenario;  // target or dataset name
    int n = 0;
    std::optional<double> noise_var;
};

std::vector<Cell> expand_cells(const ExperimentConfig& cfg);

struct CriterionOutcome {
    Criterion criterion;
    int d_hat = 1;
    double regret = 0.0;        // NaN when the test errors are degenerate
    std::vector<double> risks;  // per d, +inf where evaluation failed
    std::optional<int> b1;      // B1 used at d_hat for mDEE1 / mDEE2
    std::vector<std::string> flags;

    std::string flag_string() const;
};

struct TrialResult {
    int cell = 0;
    int trial = 0;
    std::vector<double> test_errors;  // per d
    std::vector<CriterionOutcome> outcomes;
};

struct TrialData {
    LabeledSet train;
    UnlabeledSet unlabeled;
    LabeledSet test;
};

struct TrialOptions {
    BasisSpec basis;
    int d_max = 1;
    double ridge = kDefaultRidge;
    int cv_folds = 5;
    bool rmdee_include_labeled = true;
    std::uint64_t seed = 0;  // CV fold stream
};

/// Mean squared prediction error of the model on the test set.
double test_error(const FittedModel& model, const LabeledSet& test, const BasisSpec& basis);

/// ln(test_errors[chosen - 1] / min test error). Throws std::domain_error on a
/// nonpositive test error.
double regret(const std::vector<double>& test_errors, int chosen);

/// Fits the model path once and evaluates every criterion on it. Criterion
/// failures become +inf risks plus flags; nothing here aborts the trial.
TrialResult run_trial(const TrialData& data, const std::vector<Criterion>& criteria, const TrialOptions& opts);

// ---------------------------------------------------------------------------
// Aggregation and reporting

struct AggregateStats {
    double median = 0.0;
    double iqr = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    int n_trials = 0;
};

/// Linear-interpolation quantile of a sorted sample.
double quantile_sorted(const std::vector<double>& sorted, double p);

/// Median and IQR = Q3 - Q1 of the finite entries.
AggregateStats aggregate(std::vector<double> regrets);

struct SummaryRow {
    std::string scenario;
    int n = 0;
    std::optional<double> noise_var;
    std::string criterion;
    AggregateStats stats;
};

struct ExperimentResult {
    std::vector<Cell> cells;
    std::vector<TrialResult> trials;  // ordered by (cell, trial)
    std::vector<SummaryRow> summary;
};

/// Runs every repetition of every cell. Trial t of cell c draws its data from
/// the stream derived from (master_seed, c, t), so the result does not depend
/// on the thread count.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Formats a value with 6 significant digits, the precision of every CSV.
std::string format_value(double v);

void write_trials_csv(std::ostream& out, const ExperimentResult& result);
void write_test_errors_csv(std::ostream& out, const ExperimentResult& result);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

/// Re-aggregates a trials.csv stream into summary rows.
std::vector<SummaryRow> summarize_trials_csv(std::istream& in);

/// Writes summary.csv, trials.csv, test_errors.csv and metadata.yaml into
/// cfg.output_dir.
void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result);

}  // namespace dee
