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

#include "ppcf/cli/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <sstream>

#include "ppcf/core/error.hpp"
#include "ppcf/core/io.hpp"

namespace ppcf::cli {
namespace {

std::string Trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool ValidName(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  }
  return true;
}

// Strips a trailing comment outside quotes and unquotes the value.
std::string ParseValue(const std::string& raw, const std::string& where) {
  std::string v = Trim(raw);
  if (!v.empty() && (v[0] == '"' || v[0] == '\'')) {
    const char q = v[0];
    const std::size_t close = v.find(q, 1);
    if (close == std::string::npos) ThrowUsage(where + ": unterminated string");
    const std::string rest = Trim(v.substr(close + 1));
    if (!rest.empty() && rest[0] != '#') ThrowUsage(where + ": unexpected text after string");
    return v.substr(1, close - 1);
  }
  const std::size_t hash = v.find('#');
  if (hash != std::string::npos) v = Trim(v.substr(0, hash));
  return v;
}

}  // namespace

ConfigFile ConfigFile::Parse(const std::string& text, const std::string& origin) {
  ConfigFile cfg;
  std::istringstream in(text);
  std::string line;
  std::string section = "run";
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    const std::string t = Trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t[0] == '[') {
      const std::size_t close = t.find(']');
      if (close == std::string::npos) ThrowUsage(where + ": unterminated section header");
      section = Trim(t.substr(1, close - 1));
      if (!ValidName(section)) ThrowUsage(where + ": invalid section name");
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) ThrowUsage(where + ": expected key = value");
    const std::string key = Trim(t.substr(0, eq));
    if (!ValidName(key)) ThrowUsage(where + ": invalid key '" + key + "'");
    cfg.entries_[{section, key}] = ParseValue(t.substr(eq + 1), where);
  }
  return cfg;
}

ConfigFile ConfigFile::Load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) ThrowUsage("config file not found: " + path.string());
  return Parse(ReadFileText(path), path.string());
}

std::optional<std::string> ConfigFile::Get(const std::string& section, const std::string& key) const {
  const auto it = entries_.find({section, key});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string EnvVarName(const std::string& section, const std::string& key) {
  std::string name = "PPCF_" + section + "_" + key;
  for (char& c : name) {
    c = (c == '-' || c == '.') ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return name;
}

std::string SettingSourceName(SettingSource s) {
  switch (s) {
    case SettingSource::kFlag:
      return "flag";
    case SettingSource::kEnv:
      return "env";
    case SettingSource::kFile:
      return "file";
    case SettingSource::kDefault:
      return "default";
  }
  return "?";
}

Settings::Settings(ConfigFile file, std::map<SettingKey, std::string> flags, EnvLookup env)
    : file_(std::move(file)), flags_(std::move(flags)), env_(std::move(env)) {}

Settings::EnvLookup Settings::ProcessEnv() {
  return [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
  };
}

void Settings::SetFlag(const std::string& section, const std::string& key, std::string value) {
  flags_[{section, key}] = std::move(value);
}

std::optional<std::pair<std::string, SettingSource>> Settings::Lookup(const std::string& section,
                                                                      const std::string& key) const {
  if (const auto it = flags_.find({section, key}); it != flags_.end()) {
    return std::make_pair(it->second, SettingSource::kFlag);
  }
  if (env_) {
    if (auto v = env_(EnvVarName(section, key))) return std::make_pair(*v, SettingSource::kEnv);
  }
  if (auto v = file_.Get(section, key)) return std::make_pair(*v, SettingSource::kFile);
  return std::nullopt;
}

std::string Settings::String(const std::string& section, const std::string& key,
                             const std::string& fallback) const {
  const auto v = Lookup(section, key);
  return v ? v->first : fallback;
}

double Settings::Double(const std::string& section, const std::string& key, double fallback) const {
  const auto v = Lookup(section, key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const double d = std::stod(v->first, &used);
    if (used != v->first.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    ThrowUsage(section + "." + key + ": expected a number, got '" + v->first + "'");
  }
}

std::uint64_t Settings::UInt(const std::string& section, const std::string& key,
                             std::uint64_t fallback) const {
  const auto v = Lookup(section, key);
  if (!v) return fallback;
  std::uint64_t out = 0;
  const auto* b = v->first.data();
  const auto* e = b + v->first.size();
  const auto r = std::from_chars(b, e, out);
  if (r.ec != std::errc() || r.ptr != e) {
    ThrowUsage(section + "." + key + ": expected a non-negative integer, got '" + v->first + "'");
  }
  return out;
}

bool Settings::Bool(const std::string& section, const std::string& key, bool fallback) const {
  const auto v = Lookup(section, key);
  if (!v) return fallback;
  const std::string& s = v->first;
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  ThrowUsage(section + "." + key + ": expected a boolean, got '" + s + "'");
}

SettingSource Settings::Source(const std::string& section, const std::string& key) const {
  const auto v = Lookup(section, key);
  return v ? v->second : SettingSource::kDefault;
}

}  // namespace ppcf::cli
