#include "skilltree/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace skilltree::cli {

namespace {

enum class Kind { integer, seed, real, boolean, text };

struct KeySpec {
  const char* name;
  const char* fallback;
  Kind kind;
  double lo;  // inclusive bounds for numbers
  double hi;
  const char* help;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

// clang-format off
const KeySpec kKeys[] = {
  {"out_dir",            "run",    Kind::text,    0, 0, "directory for every stage output"},
  {"data_path",          "",       Kind::text,    0, 0, "trajectory CSV (default <out_dir>/dataset.csv)"},
  {"skills_path",        "",       Kind::text,    0, 0, "skill checkpoint (default <out_dir>/skills.sktr)"},
  {"policy_path",        "",       Kind::text,    0, 0, "policy checkpoint (default <out_dir>/policy.sktr)"},
  {"tree_path",          "",       Kind::text,    0, 0, "distilled tree text (default <out_dir>/tree.txt)"},

  {"n_traj",             "500",    Kind::integer, 1, 1e7, "demonstration trajectories"},
  {"data_seed",          "1",      Kind::seed,    0, 0, "demonstration seed"},
  {"expert_noise",       "0.005",  Kind::real,    0, 0.05, "demonstrator action noise std"},

  {"h",                  "10",     Kind::integer, 1, env::kHorizon, "skill length in steps"},
  {"K",                  "8",      Kind::integer, 2, 1024, "codebook size"},
  {"D",                  "8",      Kind::integer, 1, 1024, "embedding dimension"},
  {"hidden",             "128",    Kind::integer, 1, 4096, "encoder/decoder hidden width"},
  {"prior_depth",        "4",      Kind::integer, 1, 12, "prior and policy tree depth"},
  {"beta",               "0.25",   Kind::real,    1e-12, kInf, "commitment weight"},
  {"skill_epochs",       "50",     Kind::integer, 0, 1e6, "skill training epochs"},
  {"skill_batch",        "64",     Kind::integer, 1, 1e6, "segments per skill batch"},
  {"skill_lr",           "0.003",  Kind::real,    1e-12, 10, "skill Adam learning rate"},
  {"skill_seed",         "3",      Kind::seed,    0, 0, "skill training seed"},
  {"holdout",            "0.1",    Kind::real,    0, 0.99, "held-out trajectory fraction"},
  {"dead_code_reset_fraction", "0.5", Kind::real, 0, 1, "leading fraction of epochs with dead-code resets"},

  {"gamma",              "0.99",   Kind::real,    0, 1, "discount per skill decision"},
  {"tau",                "0.005",  Kind::real,    1e-12, 1, "Polyak rate"},
  {"policy_lr",          "0.0003", Kind::real,    1e-12, 10, "policy and codebook learning rate"},
  {"critic_lr",          "0.0003", Kind::real,    1e-12, 10, "critic learning rate"},
  {"alpha_lr",           "0.0003", Kind::real,    0, 10, "learning rate on log alpha"},
  {"delta",              "1",      Kind::real,    1e-12, kInf, "target KL to the prior"},
  {"initial_alpha",      "1",      Kind::real,    1e-6, 1e6, "starting KL weight"},
  {"rl_batch",           "256",    Kind::integer, 1, 1e6, "transitions per update"},
  {"buffer",             "100000", Kind::integer, 1, 1e9, "replay capacity"},
  {"transitions_per_iter", "4",    Kind::integer, 1, 1e6, "skill transitions collected per iteration"},
  {"updates_per_iter",   "4",      Kind::integer, 0, 1e6, "gradient steps per iteration"},
  {"env_steps",          "200000", Kind::integer, 0, 1e10, "environment step budget"},
  {"critic_hidden",      "128",    Kind::integer, 1, 4096, "critic hidden width"},
  {"finetune_codebook",  "true",   Kind::boolean, 0, 0, "update the codebook through the actor"},
  {"eval_every",         "250",    Kind::integer, 1, 1e9, "iterations between metrics rows"},
  {"eval_episodes",      "10",     Kind::integer, 1, 1e6, "greedy episodes per metrics row"},
  {"rl_seed",            "1",      Kind::seed,    0, 0, "RL seed"},

  {"distill_traj",       "1000",   Kind::integer, 1, 1e7, "episodes sampled for labels"},
  {"distill_depth",      "6",      Kind::integer, 1, 30, "hard tree depth"},
  {"min_leaf",           "1",      Kind::integer, 1, 1e9, "minimum samples per leaf"},
  {"clean_threshold",    "1",      Kind::integer, -1, 3, "keep episodes with more subtasks than this"},
  {"distill_seed",       "1",      Kind::seed,    0, 0, "label sampling seed"},

  {"eval_n",             "100",    Kind::integer, 1, 1e7, "evaluation episodes"},
  {"eval_seed",          "12345",  Kind::seed,    0, 0, "evaluation seed"},
  {"ablation_episodes",  "100",    Kind::integer, 1, 1e7, "episodes per ablation row"},
  {"explain_seed",       "7",      Kind::seed,    0, 0, "ablation and trace seed"},
};
// clang-format on

const KeySpec& spec_of(const std::string& key) {
  for (const auto& s : kKeys)
    if (key == s.name) return s;
  throw ConfigError("unknown config key '" + key + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used == v.size()) return x;
  } catch (const std::logic_error&) {
  }
  throw ConfigError("config key '" + key + "' expects an integer, got '" + v + "'");
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used == v.size() && std::isfinite(x)) return x;
  } catch (const std::logic_error&) {
  }
  throw ConfigError("config key '" + key + "' expects a finite number, got '" + v + "'");
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "' expects true/false, got '" + v + "'");
}

std::uint64_t parse_seed(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] != '-') {
      const auto x = std::stoull(v, &used);
      if (used == v.size()) return x;
    }
  } catch (const std::logic_error&) {
  }
  throw ConfigError("config key '" + key + "' expects a non-negative integer seed, got '" + v + "'");
}

void check_value(const KeySpec& s, const std::string& v) {
  const std::string key = s.name;
  auto bounds = [&](double x) {
    if (x < s.lo || x > s.hi)
      throw ConfigError("config key '" + key + "' = " + v + " is outside [" + env::format_float(s.lo) + ", " +
                        env::format_float(s.hi) + "]");
  };
  switch (s.kind) {
    case Kind::integer: bounds(static_cast<double>(parse_int(key, v))); break;
    case Kind::real: bounds(parse_real(key, v)); break;
    case Kind::boolean: parse_bool(key, v); break;
    case Kind::seed: parse_seed(key, v); break;
    case Kind::text:
      if (v.find('\n') != std::string::npos) throw ConfigError("config key '" + key + "' may not contain newlines");
      break;
  }
}

}  // namespace

Config::Config() {
  for (const auto& s : kKeys) values_[s.name] = s.fallback;
}

Config Config::from_text(const std::string& text) {
  Config c;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(number) + ": expected key = value");
    c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

void Config::set(const std::string& key, const std::string& value) {
  check_value(spec_of(key), value);
  values_[key] = value;
}

const std::string& Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

bool Config::has_key(const std::string& key) const { return values_.count(key) > 0; }

long long Config::get_int(const std::string& key) const { return parse_int(key, get(key)); }
std::uint64_t Config::get_seed(const std::string& key) const { return parse_seed(key, get(key)); }
double Config::get_double(const std::string& key) const { return parse_real(key, get(key)); }
bool Config::get_bool(const std::string& key) const { return parse_bool(key, get(key)); }

void Config::validate() const {
  for (const auto& s : kKeys) check_value(s, get(s.name));
  if (get("out_dir").empty()) throw ConfigError("config key 'out_dir' must not be empty");
}

std::string Config::to_text() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

std::vector<std::string> Config::known_keys() {
  std::vector<std::string> keys;
  for (const auto& s : kKeys) keys.emplace_back(s.name);
  return keys;
}

std::string Config::describe(const std::string& key) { return spec_of(key).help; }

skillvq::SkillTrainConfig skill_config(const Config& c) {
  skillvq::SkillTrainConfig s;
  s.model.segment_length = static_cast<int>(c.get_int("h"));
  s.model.num_skills = static_cast<int>(c.get_int("K"));
  s.model.embed_dim = static_cast<int>(c.get_int("D"));
  s.model.hidden = static_cast<int>(c.get_int("hidden"));
  s.model.prior_depth = static_cast<int>(c.get_int("prior_depth"));
  s.beta = static_cast<float>(c.get_double("beta"));
  s.epochs = static_cast<int>(c.get_int("skill_epochs"));
  s.batch = static_cast<int>(c.get_int("skill_batch"));
  s.learning_rate = static_cast<float>(c.get_double("skill_lr"));
  s.seed = c.get_seed("skill_seed");
  s.holdout_fraction = c.get_double("holdout");
  s.dead_code_reset_fraction = c.get_double("dead_code_reset_fraction");
  return s;
}

hrl::RlConfig rl_config(const Config& c) {
  hrl::RlConfig r;
  r.gamma = c.get_double("gamma");
  r.tau = static_cast<float>(c.get_double("tau"));
  r.policy_lr = static_cast<float>(c.get_double("policy_lr"));
  r.critic_lr = static_cast<float>(c.get_double("critic_lr"));
  r.alpha_lr = c.get_double("alpha_lr");
  r.target_kl = c.get_double("delta");
  r.initial_alpha = c.get_double("initial_alpha");
  r.batch = static_cast<int>(c.get_int("rl_batch"));
  r.buffer_capacity = static_cast<std::size_t>(c.get_int("buffer"));
  r.transitions_per_iteration = static_cast<int>(c.get_int("transitions_per_iter"));
  r.updates_per_iteration = static_cast<int>(c.get_int("updates_per_iter"));
  r.env_steps = c.get_int("env_steps");
  r.critic_hidden = static_cast<int>(c.get_int("critic_hidden"));
  r.finetune_codebook = c.get_bool("finetune_codebook");
  r.eval_every = static_cast<int>(c.get_int("eval_every"));
  r.eval_episodes = static_cast<int>(c.get_int("eval_episodes"));
  r.seed = c.get_seed("rl_seed");
  return r;
}

distill::CartSettings cart_settings(const Config& c) {
  return {static_cast<int>(c.get_int("distill_depth")), static_cast<int>(c.get_int("min_leaf"))};
}

}  // namespace skilltree::cli
