#pragma once

#include <string>
#include <vector>

#include "config.hpp"

namespace lorentz::cli {

struct OutputFile {
    std::string name;  // relative to out_dir
    std::string content;
};

/// Runs the configured experiment in memory. `threads` only changes speed.
std::vector<OutputFile> run_experiment(const ExperimentConfig& config, int threads);

/// Writes the files into config.out_dir. On failure every file written so far
/// (and the directory, if this call created it) is removed before rethrowing.
void write_outputs(const ExperimentConfig& config, const std::vector<OutputFile>& files);

/// Version string embedded in every report.
std::string artifact_version();

}  // namespace lorentz::cli
