// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

namespace agwire {

/// Directory of JSON documents addressed by a content hash of their inputs. A cache without
/// a directory stores nothing and always computes. Writes are atomic (temporary file, then
/// rename), so concurrent writers of the same key are harmless.
class ResultCache {
 public:
  ResultCache() = default;
  explicit ResultCache(std::optional<std::filesystem::path> dir) : dir_(std::move(dir)) {}

  bool enabled() const { return dir_.has_value(); }
  std::optional<nlohmann::json> get(const std::string& key) const;
  void put(const std::string& key, const nlohmann::json& value) const;

  /// Returns the stored value for `inputs`; on a miss, computes it and stores it first.
  nlohmann::json get_or_compute(const nlohmann::json& inputs,
                                const std::function<nlohmann::json()>& compute) const;

  /// Hash of the canonical dump of `inputs` together with the tool version.
  static std::string key_for(const nlohmann::json& inputs);

 private:
  std::optional<std::filesystem::path> dir_;
};

}  // namespace agwire
