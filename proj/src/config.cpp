#include "dee/harness.hpp"

#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dee {

namespace {

namespace fs = std::filesystem;

template <typename T>
T get_or(const YAML::Node& node, const char* key, T fallback) {
    const auto child = node[key];
    return child ? child.as<T>() : fallback;
}

template <typename T>
std::vector<T> scalar_or_list(const YAML::Node& node) {
    if (!node) return {};
    if (node.IsSequence()) return node.as<std::vector<T>>();
    return {node.as<T>()};
}

ColumnRef column_ref(const YAML::Node& node) {
    int index = 0;
    if (YAML::convert<int>::decode(node, index)) return index;
    return node.as<std::string>();
}

std::string resolve_path(const std::string& path, const std::string& base_dir) {
    const fs::path p(path);
    return p.is_absolute() ? path : (fs::path(base_dir) / p).lexically_normal().string();
}

DatasetManifest manifest_from(const YAML::Node& node, const std::string& base_dir) {
    DatasetManifest m;
    m.name = node["name"].as<std::string>();
    m.path = resolve_path(node["path"].as<std::string>(), base_dir);
    if (node["response_column"]) m.response_column = column_ref(node["response_column"]);
    if (const auto cols = node["covariate_columns"]) {
        for (const auto& c : cols) m.covariate_columns.push_back(column_ref(c));
    }
    const auto delim = get_or<std::string>(node, "delimiter", ",");
    if (delim == "\\t" || delim == "tab") {
        m.delimiter = '\t';
    } else if (delim == "whitespace") {
        m.delimiter = ' ';
    } else if (delim.size() == 1) {
        m.delimiter = delim[0];
    } else {
        throw std::invalid_argument("delimiter must be a single character");
    }
    m.has_header = get_or<bool>(node, "has_header", true);
    m.n_prime = get_or<int>(node, "n_prime", 0);
    return m;
}

DmaxRule dmax_from(const YAML::Node& node) {
    DmaxRule rule;
    if (!node) return rule;
    int fixed = 0;
    if (YAML::convert<int>::decode(node, fixed)) {
        rule.kind = DmaxRule::Kind::fixed;
        rule.fixed = fixed;
        return rule;
    }
    const auto text = node.as<std::string>();
    if (text == "paper") {
        rule.kind = DmaxRule::Kind::paper;
    } else if (text == "formula") {
        rule.kind = DmaxRule::Kind::formula;
    } else {
        throw std::invalid_argument("d_max must be 'paper', 'formula' or an integer");
    }
    return rule;
}

}  // namespace

DatasetManifest load_manifest(const std::string& path) {
    const YAML::Node root = YAML::LoadFile(path);
    return manifest_from(root, fs::path(path).parent_path().string());
}

ExperimentConfig parse_config(const std::string& yaml_text, const std::string& base_dir) {
    ExperimentConfig cfg;
    try {
        const YAML::Node root = YAML::Load(yaml_text);
        cfg.name = get_or<std::string>(root, "name", cfg.name);
        cfg.master_seed = get_or<std::uint64_t>(root, "master_seed", cfg.master_seed);
        cfg.repetitions = get_or<int>(root, "repetitions", cfg.repetitions);
        cfg.ridge = get_or<double>(root, "ridge", cfg.ridge);
        cfg.threads = get_or<int>(root, "threads", cfg.threads);
        cfg.cv_folds = get_or<int>(root, "cv_folds", cfg.cv_folds);
        cfg.rmdee_include_labeled = get_or<bool>(root, "rmdee_include_labeled", cfg.rmdee_include_labeled);
        cfg.notes = get_or<std::string>(root, "notes", "");
        cfg.d_max = dmax_from(root["d_max"]);
        if (const auto out = root["output"]) {
            if (out["dir"]) cfg.output_dir = out["dir"].as<std::string>();
        }

        const auto criteria = root["criteria"];
        if (!criteria) {
            cfg.criteria = all_criteria();
        } else {
            for (const auto& c : criteria) cfg.criteria.push_back(parse_criterion(c.as<std::string>()));
        }

        const auto scenario = root["scenario"];
        if (!scenario) throw std::invalid_argument("config needs a 'scenario' section");
        if (const auto syn = scenario["synthetic"]) {
            SyntheticScenario s;
            s.target = parse_target(syn["target"].as<std::string>());
            if (syn["n"]) s.n = scalar_or_list<int>(syn["n"]);
            if (syn["noise_var"]) s.noise_var = scalar_or_list<double>(syn["noise_var"]);
            s.n_prime = get_or<int>(syn, "n_prime", s.n_prime);
            s.n_test = get_or<int>(syn, "n_test", s.n_test);
            s.covariate_var = get_or<double>(syn, "covariate_var", s.covariate_var);
            cfg.scenario = s;
        } else if (const auto real = scenario["real"]) {
            RealScenario r;
            const auto ds = real["dataset"];
            if (!ds) throw std::invalid_argument("real scenario needs a 'dataset'");
            r.dataset = ds.IsScalar() ? load_manifest(resolve_path(ds.as<std::string>(), base_dir))
                                      : manifest_from(ds, base_dir);
            if (real["n_prime"]) r.dataset.n_prime = real["n_prime"].as<int>();
            if (real["n"]) r.n = scalar_or_list<int>(real["n"]);
            r.standardize = get_or<bool>(real, "standardize", r.standardize);
            cfg.scenario = r;
        } else {
            throw std::invalid_argument("scenario must be 'synthetic' or 'real'");
        }
    } catch (const YAML::Exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), fs::path(path).parent_path().string());
}

}  // namespace dee
