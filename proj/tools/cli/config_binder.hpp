#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

namespace costot::cli {

/// Resolves a command's effective configuration as JSON with the precedence
/// command-line flag > config file > built-in default. Every key of the
/// default object is a config field; each may be bound to one CLI option.
class ConfigBinder {
 public:
  ConfigBinder(CLI::App* command, nlohmann::json defaults)
      : command_(command), defaults_(std::move(defaults)) {}

  template <typename T>
  CLI::Option* option(const std::string& key, const std::string& flags, const std::string& help) {
    auto holder = std::make_shared<T>(defaults_.at(key).get<T>());
    CLI::Option* opt = command_->add_option(flags, *holder, help)->capture_default_str();
    overrides_.push_back([opt, holder, key](nlohmann::json& j) {
      if (opt->count() > 0) j[key] = *holder;
    });
    return opt;
  }

  CLI::Option* flag(const std::string& key, const std::string& flags, const std::string& help) {
    auto holder = std::make_shared<bool>(defaults_.at(key).get<bool>());
    CLI::Option* opt = command_->add_flag(flags, *holder, help);
    overrides_.push_back([opt, holder, key](nlohmann::json& j) {
      if (opt->count() > 0) j[key] = *holder;
    });
    return opt;
  }

  /// `file_config` is the parsed --config file, either a bare config object
  /// or a summary whose "config" member is used. Unknown keys are rejected.
  nlohmann::json resolve(const nlohmann::json* file_config) const;

 private:
  CLI::App* command_;
  nlohmann::json defaults_;
  std::vector<std::function<void(nlohmann::json&)>> overrides_;
};

nlohmann::json load_json_file(const std::filesystem::path& path);

}  // namespace costot::cli
