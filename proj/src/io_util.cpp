#include "io_util.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "poolkp/error.hpp"

namespace poolkp::detail {

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::Io, "read failed for '" + path + "'");
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create '" + parent.string() + "': " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open '" + path + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for '" + path + "'");
}

nlohmann::json read_json_file(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Parse, path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

const nlohmann::json& require_field(const nlohmann::json& j, const char* field) {
  if (!j.is_object()) throw Error(ErrorKind::Validation, std::string("expected an object holding '") + field + "'");
  auto it = j.find(field);
  if (it == j.end()) throw Error(ErrorKind::Validation, std::string("missing field '") + field + "'");
  return *it;
}

double require_number(const nlohmann::json& j, const char* field) {
  const auto& v = require_field(j, field);
  if (!v.is_number()) throw Error(ErrorKind::Validation, std::string("field '") + field + "' must be a number");
  return v.get<double>();
}

long long require_integer(const nlohmann::json& j, const char* field) {
  const auto& v = require_field(j, field);
  if (!v.is_number_integer()) throw Error(ErrorKind::Validation, std::string("field '") + field + "' must be an integer");
  return v.get<long long>();
}

std::string require_string(const nlohmann::json& j, const char* field) {
  const auto& v = require_field(j, field);
  if (!v.is_string()) throw Error(ErrorKind::Validation, std::string("field '") + field + "' must be a string");
  return v.get<std::string>();
}

bool require_bool(const nlohmann::json& j, const char* field) {
  const auto& v = require_field(j, field);
  if (!v.is_boolean()) throw Error(ErrorKind::Validation, std::string("field '") + field + "' must be a boolean");
  return v.get<bool>();
}

}  // namespace poolkp::detail
