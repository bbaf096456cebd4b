#pragma once

// JSON network and solution files.
//
// Complex scalars are [re, im]; 3-vectors are three such pairs; 3x3 matrices
// are nine pairs in row-major order. Floating-point values are written with 17
// significant digits so a saved file reloads bit-for-bit.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "triphase/perphase.hpp"
#include "triphase/solver.hpp"

namespace triphase::io {

inline constexpr int kFormatVersion = 1;

/// Throws ParseError (bad JSON, missing or mistyped field) or ValidationError
/// (a network or device invariant), each naming the file and the offending location.
Network load_network(const std::filesystem::path& path);
Network parse_network(const std::string& text, const std::string& source = "<input>");

std::string network_to_json(const Network& network);
void save_network(const Network& network, const std::filesystem::path& path);

struct SolutionMetadata {
    std::string mode = "full";            // path actually used: full | per-phase
    std::string requested_mode = "full";  // full | per-phase | auto
    double balance_tolerance = kDefaultBalanceTolerance;
    std::optional<bool> balanced;         // set when the balance check ran
    std::vector<BalanceIssue> balance_issues;
};

struct SolutionFile {
    Solution solution;
    SolutionMetadata metadata;
};

std::string solution_to_json(const Solution& solution, const SolutionMetadata& metadata);
void save_solution(const Solution& solution, const SolutionMetadata& metadata, const std::filesystem::path& path);
SolutionFile parse_solution(const std::string& text, const std::string& source = "<input>");
SolutionFile load_solution(const std::filesystem::path& path);

/// Largest relative difference between two solutions over terminal V, I and s.
/// Each quantity family is normalised by the larger infinity norm of the two.
/// Throws ShapeMismatch when the bus sets differ.
double max_relative_difference(const Solution& a, const Solution& b);

}  // namespace triphase::io
