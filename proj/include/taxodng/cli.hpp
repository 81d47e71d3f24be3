#pragma once
#include <string>
#include <vector>

// Command-line front end: `taxo-dng <train|expand|eval|synth> ...`.
// Each subcommand reads an optional JSON config file; explicit flags win
// over config values, config values win over defaults. All failures exit 2
// with a message on stderr; success writes every declared output and exits 0.

namespace taxodng::cli {

// args excludes the program name. Returns the process exit status.
int run(const std::vector<std::string>& args);

}  // namespace taxodng::cli
