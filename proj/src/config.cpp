#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <set>
#include <sstream>

#include "pbrdr/csv.hpp"
#include "pbrdr/simulation.hpp"

namespace pbrdr {
namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

[[noreturn]] void bad(std::size_t line, const std::string& msg) {
    fail(ErrorKind::ConfigError, "config line " + std::to_string(line) + ": " + msg);
}

long long parse_int(const std::string& s, std::size_t line, const std::string& key) {
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
        bad(line, key + " expects an integer, got '" + s + "'");
    }
    return v;
}

bool parse_bool(const std::string& s, std::size_t line, const std::string& key) {
    const std::string v = lower(s);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad(line, key + " expects true/false, got '" + s + "'");
}

std::string valid_tags() {
    std::string out;
    for (EstimatorTag tag : all_tags()) {
        if (!out.empty()) out += ", ";
        out += tag_name(tag);
    }
    return out;
}

template <class T>
std::string join(const std::vector<T>& values, auto&& fmt) {
    std::string out;
    for (const auto& v : values) {
        if (!out.empty()) out += ',';
        out += fmt(v);
    }
    return out;
}

}  // namespace

SimulationConfig SimulationConfig::parse(const std::string& text) {
    SimulationConfig cfg;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string content = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (content.empty()) continue;
        const auto eq = content.find('=');
        if (eq == std::string::npos) bad(line, "expected key=value");
        const std::string key = lower(trim(content.substr(0, eq)));
        const std::string value = trim(content.substr(eq + 1));
        if (!seen.insert(key).second) bad(line, "duplicate key '" + key + "'");
        const std::vector<std::string> items = split_list(value);
        if (items.empty()) bad(line, "empty value for '" + key + "'");

        if (key == "scenario") {
            cfg.scenarios.clear();
            for (const auto& s : items) {
                const std::string v = lower(s);
                if (v == "s1" || v == "1") {
                    cfg.scenarios.push_back(Scenario::S1);
                } else if (v == "s2" || v == "2") {
                    cfg.scenarios.push_back(Scenario::S2);
                } else {
                    bad(line, "scenario must be S1 or S2, got '" + s + "'");
                }
            }
        } else if (key == "n" || key == "p") {
            std::vector<Index>& dst = key == "n" ? cfg.ns : cfg.ps;
            dst.clear();
            for (const auto& s : items) {
                const long long v = parse_int(s, line, key);
                if (v < 1) bad(line, key + " must be positive");
                dst.push_back(static_cast<Index>(v));
            }
        } else if (key == "correlated" || key == "or_correct" || key == "ps_correct") {
            std::vector<bool>& dst = key == "correlated"   ? cfg.correlated
                                     : key == "or_correct" ? cfg.or_correct
                                                           : cfg.ps_correct;
            dst.clear();
            for (const auto& s : items) dst.push_back(parse_bool(s, line, key));
        } else if (key == "reps") {
            if (items.size() != 1) bad(line, "reps takes a single value");
            const long long v = parse_int(items[0], line, key);
            if (v < 1 || v > 100'000'000) bad(line, "reps must be in [1, 1e8]");
            cfg.reps = static_cast<int>(v);
        } else if (key == "seed") {
            if (items.size() != 1) bad(line, "seed takes a single value");
            char* end = nullptr;
            errno = 0;
            const unsigned long long v = std::strtoull(items[0].c_str(), &end, 10);
            if (end != items[0].c_str() + items[0].size() || errno == ERANGE ||
                items[0][0] == '-') {
                bad(line, "seed expects a non-negative 64-bit integer");
            }
            cfg.seed = v;
        } else if (key == "c_signal") {
            if (items.size() != 1) bad(line, "c_signal takes a single value");
            cfg.c_signal = *parse_number(items[0], line, key);
        } else if (key == "estimators") {
            cfg.estimators.clear();
            for (const auto& s : items) {
                const auto tag = parse_tag(s);
                if (!tag) bad(line, "unknown estimator '" + s + "'; valid tags: " + valid_tags());
                cfg.estimators.push_back(*tag);
            }
        } else {
            bad(line, "unknown key '" + key + "'");
        }
    }
    for (const ScenarioSpec& cell : cfg.cells()) cell.validate();
    return cfg;
}

SimulationConfig SimulationConfig::from_spec(const ScenarioSpec& spec,
                                             std::vector<EstimatorTag> estimators) {
    SimulationConfig cfg;
    cfg.scenarios = {spec.scenario};
    cfg.ns = {spec.n};
    cfg.ps = {spec.p};
    cfg.correlated = {spec.correlated};
    cfg.or_correct = {spec.or_correct};
    cfg.ps_correct = {spec.ps_correct};
    cfg.reps = spec.reps;
    cfg.seed = spec.seed;
    cfg.c_signal = spec.c_signal;
    cfg.estimators = std::move(estimators);
    return cfg;
}

std::string SimulationConfig::serialize() const {
    const auto b = [](bool v) { return std::string(v ? "true" : "false"); };
    const auto i = [](Index v) { return std::to_string(v); };
    std::string out;
    out += "scenario=" + join(scenarios, [](Scenario s) {
               return std::string(s == Scenario::S1 ? "S1" : "S2");
           }) + '\n';
    out += "n=" + join(ns, i) + '\n';
    out += "p=" + join(ps, i) + '\n';
    out += "correlated=" + join(correlated, b) + '\n';
    out += "or_correct=" + join(or_correct, b) + '\n';
    out += "ps_correct=" + join(ps_correct, b) + '\n';
    out += "reps=" + std::to_string(reps) + '\n';
    out += "seed=" + std::to_string(seed) + '\n';
    out += "c_signal=" + format_double(c_signal) + '\n';
    out += "estimators=" + join(estimators, [](EstimatorTag t) { return std::string(tag_name(t)); }) +
           '\n';
    return out;
}

std::vector<ScenarioSpec> SimulationConfig::cells() const {
    std::vector<ScenarioSpec> out;
    for (Scenario s : scenarios)
        for (bool corr : correlated)
            for (bool orc : or_correct)
                for (bool psc : ps_correct)
                    for (Index p : ps)
                        for (Index n : ns) {
                            ScenarioSpec spec;
                            spec.scenario = s;
                            spec.n = n;
                            spec.p = p;
                            spec.correlated = corr;
                            spec.or_correct = orc;
                            spec.ps_correct = psc;
                            spec.reps = reps;
                            spec.seed = seed;
                            spec.c_signal = c_signal;
                            out.push_back(spec);
                        }
    return out;
}

}  // namespace pbrdr
