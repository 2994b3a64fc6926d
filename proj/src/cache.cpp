// SPDX-License-Identifier: Apache-2.0
#include "agwire/cache.hpp"

#include <atomic>
#include <fstream>
#include <thread>

#include "agwire/hash.hpp"

namespace agwire {

std::optional<nlohmann::json> ResultCache::get(const std::string& key) const {
  if (!dir_) return std::nullopt;
  std::ifstream in(*dir_ / (key + ".json"));
  if (!in) return std::nullopt;
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

void ResultCache::put(const std::string& key, const nlohmann::json& value) const {
  if (!dir_) return;
  static std::atomic<unsigned> counter{0};
  std::filesystem::create_directories(*dir_);
  const auto tmp = *dir_ / (key + ".tmp." +
                            std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) +
                            "." + std::to_string(counter++));
  {
    std::ofstream out(tmp);
    out << value.dump(1) << '\n';
  }
  std::filesystem::rename(tmp, *dir_ / (key + ".json"));
}

std::string ResultCache::key_for(const nlohmann::json& inputs) {
  return content_hash(nlohmann::json{{"tool", kToolVersion}, {"inputs", inputs}}.dump());
}

nlohmann::json ResultCache::get_or_compute(const nlohmann::json& inputs,
                                           const std::function<nlohmann::json()>& compute) const {
  const std::string key = key_for(inputs);
  if (auto hit = get(key)) return *hit;
  nlohmann::json value = compute();
  put(key, value);
  return value;
}

}  // namespace agwire
