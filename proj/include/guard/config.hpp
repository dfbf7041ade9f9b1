#pragma once

/**
 * Flat key-value configuration with dotted sections (guard.q, branch.*,
 * backend.*, probe.*, analysis.*, simulate.*). Precedence is deterministic:
 * built-in defaults < config file < explicit set() calls (CLI flags);
 * environment variables override secrets only (the API key).
 *
 * List-valued entries (guard.delimiters, guard.hesitation) hold quoted
 * space-separated strings with \n escapes, e.g.  ".\n\n" "]\n\n".
 */

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "guard/analysis.hpp"
#include "guard/controller.hpp"
#include "guard/remote_client.hpp"

namespace guard {

class Config {
 public:
  // All known keys with their default values.
  static Config defaults();
  // defaults() overlaid with the file's entries. Unknown keys and malformed
  // lines raise ParseError naming the key/line.
  static Config load_file(const std::string& path);
  static Config parse(const std::string& text, const std::string& origin = "<config>");

  // set() rejects unknown keys so typos fail fast.
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  bool has(const std::string& key) const;

  double get_double(const std::string& key) const;
  int64_t get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;

  // Sorted "key = value" lines; parse(serialize()) is key-by-key identical.
  std::string serialize() const;
  // Hex digest of the serialized snapshot; stamped into every emitted file.
  std::string manifest_hash() const;

  const std::map<std::string, std::string>& values() const { return values_; }

  // Typed views. Each validates ranges and names the offending key.
  GuardConfig to_guard_config() const;
  RemoteConfig to_remote_config() const;
  ProbeConfig to_probe_config() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace guard
