#pragma once

// Field readers shared by the JSON loaders. Errors carry the field path.

#include <string>

#include <nlohmann/json.hpp>

#include "parkdyn/error.hpp"

namespace parkdyn::detail {

template <class T>
T field(const nlohmann::json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw ParseError(path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path + "." + key + ": missing");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + "." + key + ": " + e.what());
  }
}

template <class T>
T field_or(const nlohmann::json& obj, const char* key, T fallback, const std::string& path) {
  if (!obj.is_object()) throw ParseError(path + ": expected an object");
  if (!obj.contains(key)) return fallback;
  return field<T>(obj, key, path);
}

inline const nlohmann::json& array_field(const nlohmann::json& obj, const char* key,
                                         const std::string& path, bool required = true) {
  static const nlohmann::json empty = nlohmann::json::array();
  if (!obj.is_object()) throw ParseError(path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) throw ParseError(path + "." + key + ": missing");
    return empty;
  }
  if (!it->is_array()) throw ParseError(path + "." + key + ": expected an array");
  return *it;
}

/// Parse text, turning a syntax error's byte offset into a line number.
nlohmann::json parse_text(const std::string& text, const std::string& source);
nlohmann::json parse_file(const std::string& path);

}  // namespace parkdyn::detail
