#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace ogrit {

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_text(const std::string& text);

/// Record of one CLI invocation, written next to its outputs.
class RunManifest {
 public:
  explicit RunManifest(std::string command);

  void set_config(nlohmann::json config) { config_ = std::move(config); }
  void set_seed(std::uint64_t seed) { seed_ = seed; has_seed_ = true; }
  /// Hashes a file, or every regular file below a directory.
  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  void add_timing(const std::string& stage, double ms) { timings_[stage] = ms; }
  void set_result(nlohmann::json result) { result_ = std::move(result); }

  [[nodiscard]] nlohmann::json to_json() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::string command_;
  nlohmann::json config_ = nlohmann::json::object();
  std::uint64_t seed_{0};
  bool has_seed_{false};
  std::map<std::string, std::string> inputs_;
  std::vector<std::string> outputs_;
  std::map<std::string, double> timings_;
  nlohmann::json result_;
  std::chrono::system_clock::time_point started_;
};

}  // namespace ogrit
