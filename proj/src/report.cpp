#include "dee/harness.hpp"

#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace dee {

namespace {

std::string noise_field(const std::optional<double>& v) { return v ? format_value(*v) : ""; }

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

constexpr const char* kTrialsHeader = "scenario,n,noise_var,trial,criterion,d_hat,regret,flags";
constexpr const char* kSummaryHeader = "scenario,n,noise_var,criterion,median,iqr,n_trials";

}  // namespace

void write_trials_csv(std::ostream& out, const ExperimentResult& result) {
    out << kTrialsHeader << '\n';
    for (const auto& t : result.trials) {
        const Cell& cell = result.cells[static_cast<std::size_t>(t.cell)];
        for (const auto& o : t.outcomes) {
            out << cell.scenario << ',' << cell.n << ',' << noise_field(cell.noise_var) << ',' << t.trial << ','
                << to_string(o.criterion) << ',' << o.d_hat << ',' << format_value(o.regret) << ',' << o.flag_string()
                << '\n';
        }
    }
}

void write_test_errors_csv(std::ostream& out, const ExperimentResult& result) {
    out << "scenario,n,noise_var,trial,d,test_error\n";
    for (const auto& t : result.trials) {
        const Cell& cell = result.cells[static_cast<std::size_t>(t.cell)];
        for (std::size_t d = 0; d < t.test_errors.size(); ++d) {
            out << cell.scenario << ',' << cell.n << ',' << noise_field(cell.noise_var) << ',' << t.trial << ','
                << d + 1 << ',' << format_value(t.test_errors[d]) << '\n';
        }
    }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
    out << kSummaryHeader << '\n';
    for (const auto& r : rows) {
        out << r.scenario << ',' << r.n << ',' << noise_field(r.noise_var) << ',' << r.criterion << ','
            << format_value(r.stats.median) << ',' << format_value(r.stats.iqr) << ',' << r.stats.n_trials << '\n';
    }
}

std::vector<SummaryRow> summarize_trials_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kTrialsHeader) throw ParseError("not a trials.csv stream", 1);

    struct Group {
        SummaryRow row;
        std::vector<double> regrets;
    };
    std::vector<Group> groups;  // first-appearance order
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_fields(line);
        if (f.size() != 8) throw ParseError("expected 8 fields", line_no);
        const std::string& scenario = f[0];
        const int n = std::stoi(f[1]);
        const std::optional<double> noise = f[2].empty() ? std::nullopt : std::optional<double>(std::stod(f[2]));
        const std::string& criterion = f[4];
        const double r = std::stod(f[6]);

        auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
            return g.row.scenario == scenario && g.row.n == n && noise_field(g.row.noise_var) == f[2] &&
                   g.row.criterion == criterion;
        });
        if (it == groups.end()) {
            groups.push_back({SummaryRow{scenario, n, noise, criterion, {}}, {}});
            it = std::prev(groups.end());
        }
        it->regrets.push_back(r);
    }

    // Rows are grouped by cell, criteria in order of first appearance.
    std::vector<SummaryRow> rows;
    std::vector<bool> used(groups.size(), false);
    for (std::size_t i = 0; i < groups.size(); ++i) {
        if (used[i]) continue;
        for (std::size_t j = i; j < groups.size(); ++j) {
            const auto& a = groups[i].row;
            const auto& b = groups[j].row;
            if (used[j] || a.scenario != b.scenario || a.n != b.n || noise_field(a.noise_var) != noise_field(b.noise_var))
                continue;
            used[j] = true;
            SummaryRow row = groups[j].row;
            row.stats = aggregate(groups[j].regrets);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result) {
    namespace fs = std::filesystem;
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);

    auto open = [&](const char* name) {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
        return f;
    };
    {
        auto f = open("summary.csv");
        write_summary_csv(f, result.summary);
    }
    {
        auto f = open("trials.csv");
        write_trials_csv(f, result);
    }
    {
        auto f = open("test_errors.csv");
        write_test_errors_csv(f, result);
    }

    YAML::Emitter meta;
    meta << YAML::BeginMap;
    meta << YAML::Key << "name" << YAML::Value << cfg.name;
    meta << YAML::Key << "master_seed" << YAML::Value << cfg.master_seed;
    meta << YAML::Key << "repetitions" << YAML::Value << cfg.repetitions;
    meta << YAML::Key << "ridge" << YAML::Value << format_value(cfg.ridge);
    meta << YAML::Key << "cv_folds" << YAML::Value << cfg.cv_folds;
    meta << YAML::Key << "criteria" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (const auto& c : cfg.criteria) meta << to_string(c);
    meta << YAML::EndSeq;
    if (const auto* s = std::get_if<SyntheticScenario>(&cfg.scenario)) {
        meta << YAML::Key << "scenario" << YAML::Value << YAML::BeginMap;
        meta << YAML::Key << "kind" << YAML::Value << "synthetic";
        meta << YAML::Key << "target" << YAML::Value << to_string(s->target);
        meta << YAML::Key << "n_prime" << YAML::Value << s->n_prime;
        meta << YAML::Key << "n_test" << YAML::Value << s->n_test;
        meta << YAML::Key << "covariate_var" << YAML::Value << format_value(s->covariate_var);
        meta << YAML::EndMap;
    } else {
        const auto& r = std::get<RealScenario>(cfg.scenario);
        meta << YAML::Key << "scenario" << YAML::Value << YAML::BeginMap;
        meta << YAML::Key << "kind" << YAML::Value << "real";
        meta << YAML::Key << "dataset" << YAML::Value << r.dataset.name;
        meta << YAML::Key << "n_prime" << YAML::Value << r.dataset.n_prime;
        meta << YAML::Key << "standardize" << YAML::Value << r.standardize;
        meta << YAML::EndMap;
    }
    meta << YAML::Key << "cells" << YAML::Value << YAML::BeginSeq;
    for (const auto& cell : result.cells) {
        meta << YAML::Flow << YAML::BeginMap;
        meta << YAML::Key << "scenario" << YAML::Value << cell.scenario;
        meta << YAML::Key << "n" << YAML::Value << cell.n;
        if (cell.noise_var) meta << YAML::Key << "noise_var" << YAML::Value << format_value(*cell.noise_var);
        meta << YAML::EndMap;
    }
    meta << YAML::EndSeq;
    if (!cfg.notes.empty()) meta << YAML::Key << "notes" << YAML::Value << cfg.notes;
    meta << YAML::EndMap;

    auto f = open("metadata.yaml");
    f << meta.c_str() << '\n';
}

}  // namespace dee
