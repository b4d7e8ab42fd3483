#pragma once

// Strict extraction of an Action from free-form model output. The first
// balanced {...} literal is taken (prose around it is ignored); "sensor" must
// be an integral number in 1..N, "velocity" any number, clamped into bounds.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

#include "frsicl/config.hpp"
#include "frsicl/types.hpp"
#include "frsicl/world.hpp"

namespace frsicl::icl {

enum class ParseErrorKind { no_object_found, malformed_object, missing_field, sensor_out_of_range, non_numeric };

inline std::string_view to_string(ParseErrorKind k) {
  switch (k) {
    case ParseErrorKind::no_object_found: return "no-object-found";
    case ParseErrorKind::malformed_object: return "malformed-object";
    case ParseErrorKind::missing_field: return "missing-field";
    case ParseErrorKind::sensor_out_of_range: return "sensor-out-of-range";
    case ParseErrorKind::non_numeric: return "non-numeric";
  }
  return "unknown";
}

struct ParseError {
  ParseErrorKind kind;
  std::string detail;
};

using ParseResult = std::variant<Action, ParseError>;

/// Position range [begin, end) of the first balanced object literal, honouring
/// JSON string quoting so braces inside strings do not count.
inline std::optional<std::pair<std::size_t, std::size_t>> find_first_object(std::string_view text) {
  const std::size_t open = text.find('{');
  if (open == std::string_view::npos) return std::nullopt;
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return std::make_pair(open, i + 1);
  }
  return std::nullopt;
}

inline ParseResult parse_action(std::string_view raw, const WorldConfig& cfg) {
  const auto span = find_first_object(raw);
  if (!span) return ParseError{ParseErrorKind::no_object_found, "no JSON object in reply"};
  const auto j = nlohmann::json::parse(raw.substr(span->first, span->second - span->first), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    return ParseError{ParseErrorKind::malformed_object, "object literal is not valid JSON"};
  }
  if (!j.contains("sensor")) return ParseError{ParseErrorKind::missing_field, "missing \"sensor\""};
  if (!j.contains("velocity")) return ParseError{ParseErrorKind::missing_field, "missing \"velocity\""};
  const auto& js = j["sensor"];
  const auto& jv = j["velocity"];
  if (!js.is_number()) return ParseError{ParseErrorKind::non_numeric, "\"sensor\" is not a number"};
  if (!jv.is_number()) return ParseError{ParseErrorKind::non_numeric, "\"velocity\" is not a number"};

  const double s = js.get<double>();
  if (!(s == std::floor(s)) || s < 1.0 || s > static_cast<double>(cfg.n_sensors)) {
    return ParseError{ParseErrorKind::sensor_out_of_range,
                      "\"sensor\" must be an integer in 1.." + std::to_string(cfg.n_sensors)};
  }
  const double v = jv.get<double>();
  if (std::isnan(v)) return ParseError{ParseErrorKind::non_numeric, "\"velocity\" is NaN"};
  return Action{static_cast<std::size_t>(s), clamp_velocity(v, cfg)};
}

}  // namespace frsicl::icl
