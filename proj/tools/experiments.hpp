#pragma once

#include <string>
#include <vector>

namespace cli {

// Runs a figure-reproduction preset (or a custom sweep loaded from a
// JSON config) and writes one CSV. Returns the process exit code.
int run_experiment(const std::string& id_or_empty, const std::string& config_path,
                   const std::string& out_path, unsigned threads);

std::vector<std::string> known_experiments();

}  // namespace cli
