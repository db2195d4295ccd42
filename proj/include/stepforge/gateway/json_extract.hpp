#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace stepforge::gateway {

enum class JsonShape { Object, List };

/// Finds the first JSON value of the requested shape in a model completion.
/// Code fences and surrounding prose are skipped. Each candidate span gets one
/// repair pass (trailing commas dropped, single-quoted strings converted).
/// Throws Error(NoJsonFound) or Error(ShapeMismatch) when only the other
/// shape is present.
nlohmann::json extract_json(std::string_view completion, JsonShape expected_shape);

/// The repair pass on its own; returns nullopt if the text still fails to parse.
std::optional<nlohmann::json> parse_with_repair(std::string_view text);

}  // namespace stepforge::gateway
