#pragma once

#include <iosfwd>
#include <string>

#include "qkd/types.hpp"

namespace qkd {

/// Parses the flat `section.key = value` configuration format (# comments,
/// blank lines allowed). All twenty documented keys are required;
/// source.extinction_db is accepted as an optional extra. Unknown keys and
/// malformed lines raise ConfigError. The result is validated.
SessionConfig parse_config(std::istream& in);
SessionConfig load_config_file(const std::string& path);

/// Writes the normalized key = value form (the same keys parse_config reads).
void print_config(std::ostream& out, const SessionConfig& cfg);

}  // namespace qkd
