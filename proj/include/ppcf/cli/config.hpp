// Copyright 2026 The ppcf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Layered settings: command-line flag > environment > config file > default.
//
// Config files are flat key/value text with sections:
//   # comment
//   [privacy]
//   epsilon = 3
//   sensitivity = "exact"
// Keys before the first section header belong to section "run". The
// environment variable for (section, key) is PPCF_<SECTION>_<KEY>, upper-cased
// with '-' and '.' mapped to '_'.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>

namespace ppcf::cli {

using SettingKey = std::pair<std::string, std::string>;  // (section, key)

class ConfigFile {
 public:
  static ConfigFile Parse(const std::string& text, const std::string& origin = "<config>");
  static ConfigFile Load(const std::filesystem::path& path);

  std::optional<std::string> Get(const std::string& section, const std::string& key) const;
  const std::map<SettingKey, std::string>& entries() const { return entries_; }

 private:
  std::map<SettingKey, std::string> entries_;
};

std::string EnvVarName(const std::string& section, const std::string& key);

enum class SettingSource { kFlag, kEnv, kFile, kDefault };
std::string SettingSourceName(SettingSource s);

class Settings {
 public:
  using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

  Settings() : Settings(ConfigFile{}, {}, ProcessEnv()) {}
  Settings(ConfigFile file, std::map<SettingKey, std::string> flags, EnvLookup env);

  static EnvLookup ProcessEnv();

  void SetFlag(const std::string& section, const std::string& key, std::string value);

  // Resolved raw value and where it came from; nullopt when unset anywhere.
  std::optional<std::pair<std::string, SettingSource>> Lookup(const std::string& section,
                                                              const std::string& key) const;

  std::string String(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  double Double(const std::string& section, const std::string& key, double fallback) const;
  std::uint64_t UInt(const std::string& section, const std::string& key,
                     std::uint64_t fallback) const;
  bool Bool(const std::string& section, const std::string& key, bool fallback) const;
  SettingSource Source(const std::string& section, const std::string& key) const;

 private:
  ConfigFile file_;
  std::map<SettingKey, std::string> flags_;
  EnvLookup env_;
};

}  // namespace ppcf::cli
