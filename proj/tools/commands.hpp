#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pbrdr/dataset.hpp"

namespace pbrdr::cli {

inline constexpr const char* kVersion = "1.0.0";

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;

struct EstimateArgs {
    std::filesystem::path csv;
    std::string outcome;
    std::string treatment;
    std::vector<std::string> covariates;  // empty: every other column
    std::string estimator = "P-BR";
    std::string target = "mu1";  // mu1, mu0 or ate
    std::string na = "drop";     // drop or error
    std::uint64_t seed = 1;      // recorded only; every estimator is deterministic
    std::filesystem::path out = ".";
};

struct SimulateArgs {
    std::filesystem::path config;
    std::filesystem::path out;
    int threads = 1;
};

struct BiasSurfaceArgs {
    std::string variant = "fig1";
    std::optional<std::string> gamma_range;  // per-variant default when empty
    std::optional<std::string> beta_range;
    Index n_large = 100000;
    std::uint64_t seed = 1;
    std::filesystem::path out;
    int threads = 1;
};

int cmd_estimate(const EstimateArgs& args, std::ostream& out, std::ostream& err);
int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err);
int cmd_bias_surface(const BiasSurfaceArgs& args, std::ostream& out, std::ostream& err);

// PBRDR_THREADS, when set to a positive integer, wins over the flag.
int resolve_threads(int flag_value);

// Full command line including argv[0].
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pbrdr::cli
