#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lorentz/analysis.hpp"
#include "lorentz/density.hpp"
#include "lorentz/dynamics.hpp"
#include "lorentz/scaling.hpp"

namespace lorentz::cli {

enum class Experiment { free_path, marginals, loops, chaos, oracle, coupling, simulate };

std::string to_string(Experiment e);

/// Malformed document. Line and column are 1-based.
class ParseError : public std::runtime_error {
public:
    ParseError(int line, int column, const std::string& message);
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

/// Every constraint the document violates.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<std::string> violations);
    const std::vector<std::string>& violations() const { return violations_; }

private:
    std::vector<std::string> violations_;
};

struct RawValue {
    std::string text;
    int line{0};    // 0 for command-line overrides
    int column{0};
};

/// Keys with '-' normalised to '_'.
using RawDocument = std::map<std::string, RawValue>;

/// Flat `key = value` lines, '#' comments, optional double quotes around values.
/// Throws ParseError on syntax errors, unknown or repeated keys.
RawDocument parse_document(const std::string& text);

/// Applies command-line overrides (they win). Throws ParseError on unknown keys.
void apply_overrides(RawDocument& doc, const std::vector<std::pair<std::string, std::string>>& overrides);

struct ExperimentConfig {
    Experiment experiment{Experiment::simulate};
    ProcessKind process{ProcessKind::markovian};
    double epsilon{0.0};
    double nu{0.0};
    DensityKind phi{DensityKind::smooth_bump};
    double rate{2.0};
    double t_max{1.0};
    std::uint64_t n_paths{1000};
    std::uint64_t seed{0};
    Window start_window{};
    int grid[3]{32, 32, 32};
    Window grid_window{};
    double gap_cutoff{1.0};
    std::string out_dir{"out"};

    ScalingParams params{};

    nlohmann::ordered_json to_json() const;
};

/// Fills defaults and checks every constraint. Throws ValidationError.
ExperimentConfig build_config(const RawDocument& doc);

/// parse_document followed by build_config.
ExperimentConfig parse_config(const std::string& text);

}  // namespace lorentz::cli
