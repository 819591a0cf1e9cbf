#pragma once

#include <string>

#include "json.hpp"

namespace poolkp::detail {

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// Parses JSON text; errors become Error(Parse) naming the path.
nlohmann::json read_json_file(const std::string& path);
/// Pretty-printed with a trailing newline.
void write_json_file(const std::string& path, const nlohmann::json& j);

/// Typed field access raising Error(Validation) that names the missing or mistyped field.
const nlohmann::json& require_field(const nlohmann::json& j, const char* field);
double require_number(const nlohmann::json& j, const char* field);
long long require_integer(const nlohmann::json& j, const char* field);
std::string require_string(const nlohmann::json& j, const char* field);
bool require_bool(const nlohmann::json& j, const char* field);

}  // namespace poolkp::detail
