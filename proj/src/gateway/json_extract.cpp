#include "stepforge/gateway/json_extract.hpp"

#include <cctype>

#include "stepforge/error.hpp"

namespace stepforge::gateway {

namespace {

using json = nlohmann::json;

// End (one past) of the bracketed span starting at `start`, honouring both
// quote styles. npos when unbalanced.
std::size_t span_end(std::string_view text, std::size_t start) {
  int depth = 0;
  char quote = 0;
  for (std::size_t i = start; i < text.size(); ++i) {
    char c = text[i];
    if (quote) {
      if (c == '\\') {
        ++i;
      } else if (c == quote) {
        quote = 0;
      }
      continue;
    }
    if (c == '"') {
      quote = c;
    } else if (c == '\'') {
      std::size_t k = i;
      while (k > start && std::isspace(static_cast<unsigned char>(text[k - 1]))) --k;
      if (k > start && std::string_view("{[,:").find(text[k - 1]) != std::string_view::npos) quote = c;
    } else if (c == '{' || c == '[') {
      ++depth;
    } else if (c == '}' || c == ']') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

std::string drop_trailing_commas(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_string = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_string) {
      out += c;
      if (c == '\\' && i + 1 < text.size()) {
        out += text[++i];
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == ',') {
      std::size_t j = i + 1;
      while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
      if (j < text.size() && (text[j] == '}' || text[j] == ']')) continue;
    }
    out += c;
  }
  return out;
}

// Rewrites single-quoted strings as double-quoted ones. Apostrophes inside
// double-quoted strings are left alone.
std::string single_to_double_quotes(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  char quote = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quote == '"') {
      out += c;
      if (c == '\\' && i + 1 < text.size()) {
        out += text[++i];
      } else if (c == '"') {
        quote = 0;
      }
    } else if (quote == '\'') {
      if (c == '\\' && i + 1 < text.size()) {
        char next = text[++i];
        if (next == '\'') {
          out += '\'';
        } else {
          out += '\\';
          out += next;
        }
      } else if (c == '\'') {
        out += '"';
        quote = 0;
      } else if (c == '"') {
        out += "\\\"";
      } else {
        out += c;
      }
    } else if (c == '"' || c == '\'') {
      quote = c;
      out += '"';
    } else {
      out += c;
    }
  }
  return out;
}

std::optional<json> try_parse(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return std::nullopt;
  }
}

}  // namespace

std::optional<json> parse_with_repair(std::string_view text) {
  if (auto v = try_parse(text)) return v;
  auto no_commas = drop_trailing_commas(text);
  if (auto v = try_parse(no_commas)) return v;
  return try_parse(drop_trailing_commas(single_to_double_quotes(text)));
}

json extract_json(std::string_view completion, JsonShape expected_shape) {
  const char want = expected_shape == JsonShape::Object ? '{' : '[';
  bool saw_other_shape = false;
  std::size_t i = 0;
  while (i < completion.size()) {
    char c = completion[i];
    if (c != '{' && c != '[') {
      ++i;
      continue;
    }
    std::size_t end = span_end(completion, i);
    if (end == std::string_view::npos) {
      ++i;
      continue;
    }
    auto parsed = parse_with_repair(completion.substr(i, end - i));
    if (!parsed) {
      ++i;
      continue;
    }
    if (c == want) return *parsed;
    saw_other_shape = true;
    i = end;
  }
  if (saw_other_shape)
    throw Error(ErrorCode::ShapeMismatch,
                std::string("expected a JSON ") + (expected_shape == JsonShape::Object ? "object" : "list"));
  throw Error(ErrorCode::NoJsonFound, "no JSON value in completion");
}

}  // namespace stepforge::gateway
