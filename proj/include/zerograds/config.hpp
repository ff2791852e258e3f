#pragma once

#include <iosfwd>
#include <string>

#include "zerograds/bench.hpp"

namespace zg {

/// Loads an INI-style file of `[section]` headers and `key = value` lines
/// on top of `cfg`. Keys not present keep their current value. Unknown
/// sections or keys are errors. See configs/example.ini for every key.
void apply_config_file(const std::string& path, BenchmarkConfig& cfg);
void apply_config_stream(std::istream& in, BenchmarkConfig& cfg);

/// Comma-separated list, whitespace trimmed, empty items dropped.
std::vector<std::string> split_list(const std::string& text);

}  // namespace zg
