#pragma once

#include "dee/core.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace dee {

/// A column given by header name or by zero-based position.
using ColumnRef = std::variant<std::string, int>;

struct DatasetManifest {
    std::string name;
    std::string path;
    ColumnRef response_column = 0;
    std::vector<ColumnRef> covariate_columns;  // empty: every other column
    char delimiter = ',';  // ' ' splits on runs of whitespace
    bool has_header = true;
    int n_prime = 0;  // unlabeled pool size used by the experiment protocol
};

struct DataTable {
    Matrix X;
    Vector y;
    std::vector<std::string> covariate_names;

    Eigen::Index rows() const { return X.rows(); }
    int covariate_dim() const { return static_cast<int>(X.cols()); }
};

/// Parse failure with a 1-based line number (0 when not line-specific).
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, int line);
    int line() const { return line_; }

private:
    int line_;
};

/// Reads delimited numeric text. Lines that are empty are skipped; a row with
/// a missing or non-numeric cell in a used column raises ParseError.
DataTable load_csv(const DatasetManifest& manifest);
DataTable parse_csv(std::istream& in, const DatasetManifest& manifest);

struct SplitSpec {
    int n = 20;
    int n_prime = 0;
    std::uint64_t seed = 0;
    bool standardize = true;
};

struct Split {
    LabeledSet train;
    UnlabeledSet unlabeled;
    LabeledSet test;
};

/// Seeded uniform permutation; first n rows train, next n' unlabeled, the rest
/// test. Standardization statistics come from train and unlabeled covariates
/// only and are applied to all three parts.
Split split(const DataTable& table, const SplitSpec& spec);

/// ceil((n - 1) / M), the number of candidate models for real data.
int dbar_for(int n, int covariate_dim);

}  // namespace dee
