#include "dee/harness.hpp"

#include "dee/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace dee {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum TrialStream : std::uint64_t { kData = 0, kFolds = 1 };
}  // namespace

std::string to_string(const Criterion& c) {
    return std::visit([](auto kind) { return to_string(kind); }, c);
}

const std::vector<Criterion>& all_criteria() {
    static const std::vector<Criterion> all{BaselineKind::FPE,   BaselineKind::cAIC,   BaselineKind::CV5,
                                            BaselineKind::ADJ,   CriterionKind::DEE,   CriterionKind::mDEE1,
                                            CriterionKind::mDEE2, CriterionKind::mDEE3, CriterionKind::rmDEE};
    return all;
}

Criterion parse_criterion(const std::string& name) {
    std::string key;
    for (char ch : name) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    if (key == "cv") key = "cv5";
    for (const auto& c : all_criteria()) {
        std::string candidate;
        for (char ch : to_string(c)) candidate.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        if (candidate == key) return c;
    }
    throw std::invalid_argument("unknown criterion '" + name + "'");
}

std::string CriterionOutcome::flag_string() const {
    std::string out;
    for (const auto& f : flags) {
        if (!out.empty()) out += ';';
        out += f;
    }
    return out;
}

// ---------------------------------------------------------------------------

double test_error(const FittedModel& model, const LabeledSet& test, const BasisSpec& basis) {
    if (test.size() < 1) throw std::invalid_argument("test set is empty");
    const DesignMatrix design = build_design(basis, test.X, model.d);
    return (test.y - design.values * model.alpha).squaredNorm() / static_cast<double>(test.size());
}

double regret(const std::vector<double>& test_errors, int chosen) {
    if (chosen < 1 || chosen > static_cast<int>(test_errors.size())) throw std::out_of_range("chosen model outside range");
    for (double e : test_errors)
        if (!(e > 0.0)) throw std::domain_error("regret needs strictly positive test errors");
    const double best = *std::min_element(test_errors.begin(), test_errors.end());
    return std::log(test_errors[static_cast<std::size_t>(chosen - 1)] / best);
}

namespace {

void add_flag(std::vector<std::string>& flags, const std::string& flag) {
    if (std::find(flags.begin(), flags.end(), flag) == flags.end()) flags.push_back(flag);
}

bool is_block_criterion(const Criterion& c) {
    const auto* kind = std::get_if<CriterionKind>(&c);
    return kind && *kind != CriterionKind::DEE;
}

}  // namespace

TrialResult run_trial(const TrialData& data, const std::vector<Criterion>& criteria, const TrialOptions& opts) {
    TrialResult res;
    const int n = static_cast<int>(data.train.size());
    const int d_max = opts.d_max;

    auto fail_all = [&](const std::string& flag) {
        for (const auto& c : criteria) {
            CriterionOutcome o{c, 1, kNaN, std::vector<double>(static_cast<std::size_t>(d_max), kInf), {}, {flag}};
            res.outcomes.push_back(std::move(o));
        }
        return res;
    };

    ModelPath path;
    try {
        path = fit_model_path(data.train, opts.basis, d_max, opts.ridge);
    } catch (const std::exception&) {
        return fail_all("fit_failed");
    }
    for (int d = 1; d <= d_max; ++d) res.test_errors.push_back(test_error(path.at(d), data.test, opts.basis));

    // Shared per-trial state, built only when some criterion needs it.
    const bool need_blocks = std::any_of(criteria.begin(), criteria.end(), is_block_criterion);
    std::optional<BlockPartition> blocks;
    if (need_blocks) {
        try {
            blocks = block_partition(data.unlabeled, n);
        } catch (const std::invalid_argument&) {
        }
    }
    std::vector<std::optional<BlockStats>> stats(static_cast<std::size_t>(d_max));
    std::vector<std::optional<int>> b1_at(static_cast<std::size_t>(d_max));
    auto stats_at = [&](int d) -> const BlockStats& {
        auto& slot = stats[static_cast<std::size_t>(d - 1)];
        if (!blocks) throw std::invalid_argument("unlabeled pool smaller than one block");
        if (!slot) slot.emplace(*blocks, opts.basis, d, opts.ridge);
        return *slot;
    };
    // B1 depends on the pool and d only; mDEE1 and mDEE2 share it.
    auto b1_for = [&](int d) {
        auto& slot = b1_at[static_cast<std::size_t>(d - 1)];
        if (!slot) slot = select_B1(stats_at(d)).b1;
        return *slot;
    };

    std::optional<std::vector<double>> adj_scores;
    std::optional<std::vector<int>> folds;

    for (const auto& criterion : criteria) {
        CriterionOutcome out;
        out.criterion = criterion;
        out.risks.assign(static_cast<std::size_t>(d_max), kInf);
        std::vector<std::optional<int>> b1_used(static_cast<std::size_t>(d_max));
        bool ill = false;

        for (int d = 1; d <= d_max; ++d) {
            double risk = kInf;
            try {
                const double loss = path.at(d).train_loss;
                if (const auto* base = std::get_if<BaselineKind>(&criterion)) {
                    switch (*base) {
                        case BaselineKind::FPE: risk = fpe(loss, n, d); break;
                        case BaselineKind::cAIC: risk = caic(loss, n, d); break;
                        case BaselineKind::CV5:
                            if (!folds) {
                                Engine rng = make_engine(opts.seed, {kFolds});
                                folds = kfold_assignment(n, opts.cv_folds, rng);
                            }
                            risk = kfold_cv(data.train, opts.basis, d, *folds, opts.cv_folds, opts.ridge);
                            break;
                        case BaselineKind::ADJ:
                            if (!adj_scores) adj_scores = adj_all(path, data.train.X, data.unlabeled);
                            risk = (*adj_scores)[static_cast<std::size_t>(d - 1)];
                            break;
                    }
                } else {
                    const auto kind = std::get<CriterionKind>(criterion);
                    CorrectionEstimate est;
                    switch (kind) {
                        case CriterionKind::DEE: est = dee(path, data.unlabeled, d); break;
                        case CriterionKind::mDEE1:
                        case CriterionKind::mDEE2: {
                            const int b1 = b1_for(d);
                            est = mdee(path, stats_at(d), kind, b1, d);
                            b1_used[static_cast<std::size_t>(d - 1)] = b1;
                            break;
                        }
                        case CriterionKind::mDEE3: est = mdee(path, stats_at(d), kind, 0, d); break;
                        case CriterionKind::rmDEE: est = rmdee(path, stats_at(d), d, opts.rmdee_include_labeled); break;
                    }
                    ill = ill || est.ill_conditioned;
                    risk = est.risk;
                }
            } catch (const std::exception&) {
                risk = kInf;
            }
            out.risks[static_cast<std::size_t>(d - 1)] = std::isnan(risk) ? kInf : risk;
        }

        const Selection sel = select_model(out.risks);
        out.d_hat = sel.d_hat;
        if (std::any_of(out.risks.begin(), out.risks.end(), [](double r) { return !std::isfinite(r); }))
            add_flag(out.flags, "inf_risk");
        if (sel.all_infinite) add_flag(out.flags, "all_inf");
        if (ill) add_flag(out.flags, "ill_cond");
        out.b1 = b1_used[static_cast<std::size_t>(out.d_hat - 1)];
        if (out.b1) add_flag(out.flags, "b1=" + std::to_string(*out.b1));
        try {
            out.regret = regret(res.test_errors, out.d_hat);
        } catch (const std::domain_error&) {
            out.regret = kNaN;
            add_flag(out.flags, "degenerate_test");
        }
        res.outcomes.push_back(std::move(out));
    }
    return res;
}

// ---------------------------------------------------------------------------

double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

AggregateStats aggregate(std::vector<double> regrets) {
    std::erase_if(regrets, [](double r) { return !std::isfinite(r); });
    AggregateStats s;
    s.n_trials = static_cast<int>(regrets.size());
    if (regrets.empty()) {
        s.median = s.iqr = s.q1 = s.q3 = kNaN;
        return s;
    }
    std::sort(regrets.begin(), regrets.end());
    s.median = quantile_sorted(regrets, 0.5);
    s.q1 = quantile_sorted(regrets, 0.25);
    s.q3 = quantile_sorted(regrets, 0.75);
    s.iqr = s.q3 - s.q1;
    return s;
}

int DmaxRule::resolve(int n, int covariate_dim, bool synthetic) const {
    switch (kind) {
        case Kind::fixed: return fixed;
        case Kind::formula: return dbar_for(n, covariate_dim);
        case Kind::paper:
            if (!synthetic) return dbar_for(n, covariate_dim);
            if (n == 10) return 8;
            if (n == 20) return 15;
            if (n == 50) return 23;
            return dbar_for(n, covariate_dim);
    }
    return 1;
}

void ExperimentConfig::validate() const {
    if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
    if (criteria.empty()) throw std::invalid_argument("criteria must not be empty");
    if (threads < 1) throw std::invalid_argument("threads must be >= 1");
    if (!(ridge >= 0.0)) throw std::invalid_argument("ridge must be >= 0");
    if (cv_folds < 2) throw std::invalid_argument("cv_folds must be >= 2");
    if (d_max.kind == DmaxRule::Kind::fixed && d_max.fixed < 1) throw std::invalid_argument("d_max must be >= 1");

    const bool synthetic = std::holds_alternative<SyntheticScenario>(scenario);
    const auto& ns = synthetic ? std::get<SyntheticScenario>(scenario).n : std::get<RealScenario>(scenario).n;
    if (ns.empty()) throw std::invalid_argument("scenario needs at least one n");
    if (synthetic) {
        const auto& s = std::get<SyntheticScenario>(scenario);
        if (s.noise_var.empty()) throw std::invalid_argument("synthetic scenario needs at least one noise_var");
        for (double v : s.noise_var)
            if (v < 0.0) throw std::invalid_argument("noise_var must be >= 0");
        if (!(s.covariate_var > 0.0)) throw std::invalid_argument("covariate_var must be > 0");
        if (s.n_test < 1 || s.n_prime < 0) throw std::invalid_argument("invalid n_test or n_prime");
    }
    for (int n : ns) {
        if (n < 2) throw std::invalid_argument("n must be >= 2");
        if (d_max.kind == DmaxRule::Kind::fixed && d_max.fixed >= n)
            throw std::invalid_argument("d_max must be smaller than n=" + std::to_string(n));
    }
}

std::vector<Cell> expand_cells(const ExperimentConfig& cfg) {
    std::vector<Cell> cells;
    if (const auto* s = std::get_if<SyntheticScenario>(&cfg.scenario)) {
        for (int n : s->n)
            for (double v : s->noise_var)
                cells.push_back({static_cast<int>(cells.size()), to_string(s->target), n, v});
    } else {
        const auto& r = std::get<RealScenario>(cfg.scenario);
        for (int n : r.n) cells.push_back({static_cast<int>(cells.size()), r.dataset.name, n, std::nullopt});
    }
    return cells;
}

std::string format_value(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v == 0.0 ? 0.0 : v);
    return buf;
}

namespace {

double recorded(double v) { return std::isfinite(v) ? std::stod(format_value(v)) : v; }

std::vector<SummaryRow> summarize(const std::vector<Cell>& cells, const std::vector<Criterion>& criteria,
                                  const std::vector<TrialResult>& trials) {
    std::vector<SummaryRow> rows;
    for (const auto& cell : cells) {
        for (std::size_t k = 0; k < criteria.size(); ++k) {
            std::vector<double> regrets;
            for (const auto& t : trials)
                if (t.cell == cell.index) regrets.push_back(recorded(t.outcomes[k].regret));
            rows.push_back({cell.scenario, cell.n, cell.noise_var, to_string(criteria[k]), aggregate(regrets)});
        }
    }
    return rows;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult result;
    result.cells = expand_cells(cfg);

    const bool synthetic = std::holds_alternative<SyntheticScenario>(cfg.scenario);
    std::optional<DataTable> table;
    if (!synthetic) table = load_csv(std::get<RealScenario>(cfg.scenario).dataset);
    const int covariate_dim = synthetic ? 1 : table->covariate_dim();

    const auto reps = static_cast<std::size_t>(cfg.repetitions);
    result.trials.resize(result.cells.size() * reps);

    auto run_job = [&](std::size_t job) {
        const Cell& cell = result.cells[job / reps];
        const int trial = static_cast<int>(job % reps);
        const auto cell_id = static_cast<std::uint64_t>(cell.index);
        const auto trial_id = static_cast<std::uint64_t>(trial);

        TrialData data;
        if (synthetic) {
            const auto& s = std::get<SyntheticScenario>(cfg.scenario);
            SyntheticConfig sc{s.target, cell.n, s.n_prime, s.n_test, *cell.noise_var, s.covariate_var,
                               derive_seed(cfg.master_seed, {cell_id, trial_id, kData})};
            auto gen = generate(sc);
            data = {std::move(gen.train), std::move(gen.unlabeled), std::move(gen.test)};
        } else {
            const auto& r = std::get<RealScenario>(cfg.scenario);
            SplitSpec spec{cell.n, r.dataset.n_prime, derive_seed(cfg.master_seed, {cell_id, trial_id, kData}),
                           r.standardize};
            auto parts = split(*table, spec);
            data = {std::move(parts.train), std::move(parts.unlabeled), std::move(parts.test)};
        }

        TrialOptions opts;
        opts.basis = BasisSpec{BasisKind::fourier, covariate_dim};
        opts.d_max = cfg.d_max.resolve(cell.n, covariate_dim, synthetic);
        opts.ridge = cfg.ridge;
        opts.cv_folds = cfg.cv_folds;
        opts.rmdee_include_labeled = cfg.rmdee_include_labeled;
        opts.seed = derive_seed(cfg.master_seed, {cell_id, trial_id, kFolds});

        TrialResult tr = run_trial(data, cfg.criteria, opts);
        tr.cell = cell.index;
        tr.trial = trial;
        result.trials[job] = std::move(tr);
    };

    const std::size_t jobs = result.trials.size();
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), jobs);
    if (workers <= 1) {
        for (std::size_t j = 0; j < jobs; ++j) run_job(j);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr error;
        std::mutex error_mutex;
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t j = next++; j < jobs; j = next++) {
                    try {
                        run_job(j);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!error) error = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        if (error) std::rethrow_exception(error);
    }

    result.summary = summarize(result.cells, cfg.criteria, result.trials);
    return result;
}

}  // namespace dee
