#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pbrdr/dataset.hpp"

namespace pbrdr {

// Shortest round-trip decimal form ("%.17g"); NaN is written as NA.
std::string format_double(double value);

// Strict parse of a whole field as a double; nullopt for missing markers
// (empty, NA, NaN) and throws ConfigError on anything else unparseable.
std::optional<double> parse_number(const std::string& field, std::size_t line,
                                   const std::string& column);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;  // 1-based source line of each row

    std::size_t column(const std::string& name) const;
};

// Comma-separated text with a header row; double-quoted fields may contain
// commas and doubled quotes. CRLF line endings are accepted.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);

enum class NaPolicy { DropRows, Error };

struct CsvSchema {
    std::string outcome_col;
    std::string treatment_col;
    std::vector<std::string> covariate_cols;  // empty: every remaining column
    NaPolicy na_policy = NaPolicy::DropRows;
};

struct LoadedData {
    Dataset data;
    std::vector<std::string> covariate_names;
    std::size_t dropped_rows = 0;
};

inline constexpr Index kMinAnalysisUnits = 10;

LoadedData dataset_from_csv(const CsvTable& table, const CsvSchema& schema);

// Columns y, a, x1..xp with format_double numbers.
std::string dataset_to_csv(const Dataset& data);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace pbrdr
