#include "config_binder.hpp"

#include <fstream>

#include "costot/error.hpp"

namespace costot::cli {

nlohmann::json ConfigBinder::resolve(const nlohmann::json* file_config) const {
  nlohmann::json effective = defaults_;
  if (file_config != nullptr) {
    const nlohmann::json& source =
        file_config->contains("config") ? file_config->at("config") : *file_config;
    if (!source.is_object()) {
      throw Error(ErrorCode::parse_error, "config file must hold a JSON object");
    }
    for (const auto& [key, value] : source.items()) {
      if (!effective.contains(key)) {
        throw Error(ErrorCode::parse_error, "unknown config key '" + key + "'");
      }
      if (key == "command" && value != effective.at("command")) {
        throw Error(ErrorCode::parse_error,
                    "config was written by '" + value.dump() + "', not '" +
                        effective.at("command").get<std::string>() + "'");
      }
      effective[key] = value;
    }
  }
  for (const auto& apply : overrides_) apply(effective);
  return effective;
}

nlohmann::json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open config " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::parse_error, path.string() + ": " + e.what());
  }
}

}  // namespace costot::cli
