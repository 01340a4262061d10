#pragma once

// The `vagan` command line: labels, stats, split, synth, train, eval,
// sample and gradcheck subcommands.

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "vagan/error.hpp"
#include "vagan/trainer.hpp"

namespace vagan {

// Parses, runs and reports. Errors are printed to err as one line
// "error: <category>: <message>" and mapped to a nonzero exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int exit_code_for(ErrorKind kind) noexcept;

// "key = value" lines with '#' comments.
std::map<std::string, std::string> read_config_file(const std::string& path);

// Inverse of TrainConfig::to_key_values(); unknown keys are config errors.
TrainConfig train_config_from_pairs(const std::map<std::string, std::string>& pairs);

}  // namespace vagan
