#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dsvr/codec/bitstream.hpp"
#include "dsvr/core/synth.hpp"
#include "dsvr/nets/budget.hpp"
#include "dsvr/train/train.hpp"

namespace dsvr::cli {

// INI-style key/value store. Every section and key must be known; values
// stay strings until resolve().
class ConfigStore {
 public:
  ConfigStore();

  // `key = value` lines under `[section]` headers; '#' and ';' start comments.
  void load_file(const std::filesystem::path& file);
  void load_string(const std::string& text, const std::string& origin = "<string>");
  // "section.key=value".
  void set_assignment(const std::string& assignment);
  void set(const std::string& section, const std::string& key, const std::string& value);

  bool is_set(const std::string& section, const std::string& key) const;
  std::optional<std::string> get(const std::string& section, const std::string& key) const;

  static const std::map<std::string, std::vector<std::string>>& schema();

 private:
  std::map<std::string, std::map<std::string, std::string>> values_;
};

struct InputSpec {
  std::filesystem::path dir;  // empty: synthetic video
  int limit = 0;              // 0: every frame
  core::SynthSpec synth;
};

struct RunConfig {
  nets::Method method = nets::Method::Dual;
  long long size = 300000;
  std::uint64_t seed = 0;
  std::string arch_preset = "desk";
  nets::ModelConfig model;  // decoder widths unset until the budget is solved
  std::vector<int> ratio;
  nets::BudgetTolerance tolerance;
  train::TrainConfig train;
  codec::EncodeOptions codec;
  InputSpec input;

  // Echo of every effective value, loadable by load_file.
  std::string to_ini() const;
  void write(const std::filesystem::path& dir) const;
};

// Typed, validated view. Throws ConfigError.
RunConfig resolve(const ConfigStore& store);

}  // namespace dsvr::cli
