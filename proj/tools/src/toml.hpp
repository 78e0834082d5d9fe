#pragma once

#include <string_view>

#include <nlohmann/json.hpp>

namespace fincon::cli {

/// Parses the TOML subset used by run configs into a JSON object: comments,
/// [table] and [dotted.table] headers, bare or quoted keys, basic strings,
/// integers, floats, booleans, arrays (may span lines) and inline tables.
/// Throws ValidationError with the offending line number.
nlohmann::ordered_json parse_toml(std::string_view text);

}  // namespace fincon::cli
