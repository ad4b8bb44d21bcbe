// SPDX-License-Identifier: Apache-2.0
// Field extraction for JSONL records with line-numbered schema errors.
#pragma once

#include <json.hpp>

#include <istream>
#include <optional>
#include <string>

#include "cfr/error.hpp"

namespace cfr::detail {

using nlohmann::json;

inline const json& require(const json& obj, const char* key, std::size_t line) {
    if (!obj.is_object()) throw SchemaError(line, "record is not a JSON object");
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        throw SchemaError(line, std::string("missing required field '") + key + "'");
    }
    return *it;
}

inline std::string require_string(const json& obj, const char* key, std::size_t line) {
    const auto& v = require(obj, key, line);
    if (!v.is_string()) throw SchemaError(line, std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

inline int require_int(const json& obj, const char* key, std::size_t line) {
    const auto& v = require(obj, key, line);
    if (!v.is_number_integer()) {
        throw SchemaError(line, std::string("field '") + key + "' must be an integer");
    }
    return v.get<int>();
}

inline bool require_bool(const json& obj, const char* key, std::size_t line) {
    const auto& v = require(obj, key, line);
    if (!v.is_boolean()) throw SchemaError(line, std::string("field '") + key + "' must be a boolean");
    return v.get<bool>();
}

inline std::optional<std::string> optional_string(const json& obj, const char* key,
                                                  std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw SchemaError(line, std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

/// Calls fn(record, line_number) for every non-blank line.
template <typename Fn>
void for_each_jsonl(std::istream& in, Fn&& fn) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(lineno, e.what());
        }
        fn(rec, lineno);
    }
}

}  // namespace cfr::detail
