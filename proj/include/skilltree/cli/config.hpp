#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "skilltree/distill/cart.hpp"
#include "skilltree/hrl/trainer.hpp"
#include "skilltree/skillvq/train.hpp"

namespace skilltree::cli {

/// Flat key=value settings for every pipeline stage. Keys outside the known
/// set are rejected; values are checked on set() and again by validate().
class Config {
 public:
  /// Every key at its default value.
  Config();

  /// Parses `key = value` lines; `#` starts a comment. Later lines win.
  static Config from_text(const std::string& text);
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  bool has_key(const std::string& key) const;

  long long get_int(const std::string& key) const;
  std::uint64_t get_seed(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  /// Re-checks every value and requires a non-empty out_dir. Throws ConfigError.
  void validate() const;

  /// Sorted `key=value` lines; the canonical form that gets hashed.
  std::string to_text() const;
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  static std::vector<std::string> known_keys();
  static std::string describe(const std::string& key);

 private:
  std::map<std::string, std::string> values_;
};

skillvq::SkillTrainConfig skill_config(const Config& c);
hrl::RlConfig rl_config(const Config& c);
distill::CartSettings cart_settings(const Config& c);

}  // namespace skilltree::cli
