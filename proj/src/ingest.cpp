#include "dee/ingest.hpp"

#include "dee/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace dee {

ParseError::ParseError(const std::string& what, int line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    if (delim == ' ') {  // any run of blanks
        while (ss >> cell) cells.push_back(cell);
        return cells;
    }
    while (std::getline(ss, cell, delim)) cells.push_back(cell);
    if (!line.empty() && line.back() == delim) cells.emplace_back();
    return cells;
}

std::string trim(std::string s) {
    const auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
    s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
    s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

bool parse_number(const std::string& text, double& out) {
    const std::string t = trim(text);
    if (t.empty()) return false;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

int resolve(const ColumnRef& ref, const std::vector<std::string>& header, std::size_t width) {
    if (const int* idx = std::get_if<int>(&ref)) {
        if (*idx < 0 || static_cast<std::size_t>(*idx) >= width)
            throw ParseError("column index " + std::to_string(*idx) + " out of range", 0);
        return *idx;
    }
    const auto& name = std::get<std::string>(ref);
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError("missing column '" + name + "'", 0);
    return static_cast<int>(it - header.begin());
}

}  // namespace

DataTable parse_csv(std::istream& in, const DatasetManifest& manifest) {
    std::string line;
    int line_no = 0;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<int> row_lines;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto cells = split_line(line, manifest.delimiter);
        if (manifest.has_header && header.empty()) {
            for (auto& c : cells) header.push_back(trim(c));
            continue;
        }
        rows.push_back(std::move(cells));
        row_lines.push_back(line_no);
    }
    if (rows.empty()) throw ParseError("no data rows in '" + manifest.path + "'", 0);

    const std::size_t width = header.empty() ? rows.front().size() : header.size();
    const int response = resolve(manifest.response_column, header, width);
    std::vector<int> covariates;
    if (manifest.covariate_columns.empty()) {
        for (int c = 0; c < static_cast<int>(width); ++c)
            if (c != response) covariates.push_back(c);
    } else {
        for (const auto& ref : manifest.covariate_columns) covariates.push_back(resolve(ref, header, width));
    }
    if (std::find(covariates.begin(), covariates.end(), response) != covariates.end())
        throw ParseError("response column is also listed as a covariate", 0);
    if (covariates.empty()) throw ParseError("no covariate columns", 0);

    DataTable table;
    table.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(covariates.size()));
    table.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (int c : covariates)
        table.covariate_names.push_back(header.empty() ? "x" + std::to_string(c) : header[static_cast<std::size_t>(c)]);

    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& cells = rows[r];
        auto cell = [&](int c) -> double {
            double v = 0.0;
            if (static_cast<std::size_t>(c) >= cells.size())
                throw ParseError("missing value in column " + std::to_string(c), row_lines[r]);
            if (!parse_number(cells[static_cast<std::size_t>(c)], v))
                throw ParseError("non-numeric value '" + trim(cells[static_cast<std::size_t>(c)]) + "' in column " +
                                     std::to_string(c),
                                 row_lines[r]);
            return v;
        };
        const auto i = static_cast<Eigen::Index>(r);
        for (std::size_t j = 0; j < covariates.size(); ++j) table.X(i, static_cast<Eigen::Index>(j)) = cell(covariates[j]);
        table.y(i) = cell(response);
    }
    return table;
}

DataTable load_csv(const DatasetManifest& manifest) {
    std::ifstream in(manifest.path);
    if (!in) throw ParseError("cannot open '" + manifest.path + "'", 0);
    return parse_csv(in, manifest);
}

Split split(const DataTable& table, const SplitSpec& spec) {
    const auto total = table.rows();
    if (spec.n < 1 || spec.n_prime < 0 || spec.n + spec.n_prime > total)
        throw std::invalid_argument("split: n=" + std::to_string(spec.n) + " n'=" + std::to_string(spec.n_prime) +
                                    " infeasible for " + std::to_string(total) + " rows");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(total));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Engine rng(spec.seed);
    std::shuffle(order.begin(), order.end(), rng);

    const auto n = static_cast<std::size_t>(spec.n);
    const auto np = static_cast<std::size_t>(spec.n_prime);
    const std::vector<Eigen::Index> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
    const std::vector<Eigen::Index> pool(order.begin() + static_cast<std::ptrdiff_t>(n),
                                         order.begin() + static_cast<std::ptrdiff_t>(n + np));
    const std::vector<Eigen::Index> test(order.begin() + static_cast<std::ptrdiff_t>(n + np), order.end());

    Split out;
    out.train = {table.X(train, Eigen::all), table.y(train)};
    out.unlabeled = {table.X(pool, Eigen::all)};
    out.test = {table.X(test, Eigen::all), table.y(test)};

    if (spec.standardize) {
        const auto fitted = static_cast<double>(n + np);
        const Eigen::RowVectorXd mean =
            (out.train.X.colwise().sum() + out.unlabeled.X.colwise().sum()) / fitted;
        const Eigen::RowVectorXd sq = ((out.train.X.rowwise() - mean).array().square().colwise().sum() +
                                       (out.unlabeled.X.rowwise() - mean).array().square().colwise().sum()) /
                                      fitted;
        // constant columns are only centered
        const Eigen::RowVectorXd scale = sq.array().sqrt().unaryExpr([](double s) { return s > 0.0 ? 1.0 / s : 1.0; });
        auto apply = [&](Matrix& X) { X = ((X.rowwise() - mean).array().rowwise() * scale.array()).matrix(); };
        apply(out.train.X);
        apply(out.unlabeled.X);
        apply(out.test.X);
    }
    return out;
}

int dbar_for(int n, int covariate_dim) {
    if (n < 2 || covariate_dim < 1) throw std::invalid_argument("dbar_for needs n >= 2 and M >= 1");
    return (n - 1 + covariate_dim - 1) / covariate_dim;
}

}  // namespace dee
