#include "pbrdr/csv.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pbrdr/error.hpp"

namespace pbrdr {

std::string format_double(double value) {
    if (std::isnan(value)) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

namespace {

bool is_missing(const std::string& s) {
    return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "na";
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

std::string where(std::size_t line, const std::string& column) {
    return "line " + std::to_string(line) + ", column '" + column + "'";
}

}  // namespace

std::optional<double> parse_number(const std::string& field, std::size_t line,
                                   const std::string& column) {
    const std::string s = trim(field);
    if (is_missing(s)) return std::nullopt;
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
        fail(ErrorKind::ConfigError, where(line, column) + ": '" + s + "' is not a number");
    }
    return v;
}

std::size_t CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) fail(ErrorKind::ConfigError, "no column named '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

namespace {

std::vector<std::string> split_record(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) fail(ErrorKind::ConfigError, "line " + std::to_string(line_no) + ": unclosed quote");
    fields.push_back(cur);
    return fields;
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        std::vector<std::string> fields = split_record(line, line_no);
        for (auto& f : fields) f = trim(f);
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size()) {
            fail(ErrorKind::ConfigError, "line " + std::to_string(line_no) + ": expected " +
                                             std::to_string(table.header.size()) +
                                             " fields, found " + std::to_string(fields.size()));
        }
        table.rows.push_back(std::move(fields));
        table.line_numbers.push_back(line_no);
    }
    if (!have_header) fail(ErrorKind::ConfigError, "CSV has no header row");
    return table;
}

CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_text_file(path)); }

LoadedData dataset_from_csv(const CsvTable& table, const CsvSchema& schema) {
    if (schema.outcome_col == schema.treatment_col) {
        fail(ErrorKind::ConfigError, "outcome and treatment columns must differ");
    }
    const std::size_t yc = table.column(schema.outcome_col);
    const std::size_t ac = table.column(schema.treatment_col);
    std::vector<std::string> names = schema.covariate_cols;
    if (names.empty()) {
        for (const auto& h : table.header) {
            if (h != schema.outcome_col && h != schema.treatment_col) names.push_back(h);
        }
    }
    std::vector<std::size_t> xc;
    for (const auto& name : names) {
        const std::size_t c = table.column(name);
        if (c == yc || c == ac) {
            fail(ErrorKind::ConfigError, "column '" + name + "' cannot be both covariate and " +
                                             "outcome or treatment");
        }
        xc.push_back(c);
    }

    LoadedData out;
    out.covariate_names = names;
    std::vector<double> ys, as;
    std::vector<std::vector<double>> xs;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::size_t line = table.line_numbers[r];
        bool missing = false;
        const auto take = [&](std::size_t c) {
            const auto v = parse_number(row[c], line, table.header[c]);
            if (!v) {
                if (schema.na_policy == NaPolicy::Error) {
                    fail(ErrorKind::ConfigError, where(line, table.header[c]) + ": missing value");
                }
                missing = true;
                return 0.0;
            }
            return *v;
        };
        const double y = take(yc);
        const double a = take(ac);
        std::vector<double> x;
        for (std::size_t c : xc) x.push_back(take(c));
        if (missing) {
            ++out.dropped_rows;
            continue;
        }
        if (a != 0.0 && a != 1.0) {
            fail(ErrorKind::ConfigError, where(line, schema.treatment_col) +
                                             ": treatment must be 0 or 1, found '" + row[ac] +
                                             "'");
        }
        ys.push_back(y);
        as.push_back(a);
        xs.push_back(std::move(x));
    }
    const Index n = static_cast<Index>(ys.size());
    if (n < kMinAnalysisUnits) {
        fail(ErrorKind::ConfigError, "only " + std::to_string(n) +
                                         " complete rows; at least 10 are required");
    }
    Dataset& d = out.data;
    d.y = Eigen::Map<const Vector>(ys.data(), n);
    d.a = Eigen::Map<const Vector>(as.data(), n);
    d.x.resize(n, static_cast<Index>(xc.size()));
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < d.x.cols(); ++j) {
            d.x(i, j) = xs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    return out;
}

std::string dataset_to_csv(const Dataset& data) {
    std::string out = "y,a";
    for (Index j = 0; j < data.p(); ++j) out += ",x" + std::to_string(j + 1);
    out += '\n';
    for (Index i = 0; i < data.n(); ++i) {
        out += format_double(data.y[i]);
        out += ',';
        out += data.a[i] == 1.0 ? "1" : "0";
        for (Index j = 0; j < data.p(); ++j) {
            out += ',';
            out += format_double(data.x(i, j));
        }
        out += '\n';
    }
    return out;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::IoError, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::IoError, "cannot write '" + path.string() + "'");
    out << content;
    if (!out) fail(ErrorKind::IoError, "write to '" + path.string() + "' failed");
}

}  // namespace pbrdr
