#pragma once

#include <map>
#include <string>
#include <vector>

#include "sampcf/common.hpp"
#include "sampcf/graph.hpp"
#include "sampcf/trainer.hpp"

namespace sampcf {

// Flat key=value configuration: optional config file plus --key=value
// command-line overrides. Keys are validated against a fixed registry;
// unknown keys are rejected by name.
class RunConfig {
 public:
  RunConfig() = default;

  static RunConfig from_file(const std::string& path);
  // --key=value / --flag (bool true) overrides; later values win.
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string get_str(const std::string& key, const std::string& def) const;
  std::string get_required(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t def) const;
  double get_double(const std::string& key, double def) const;
  bool get_bool(const std::string& key, bool def) const;

  // Throws ConfigError naming the first key outside the registry.
  void reject_unknown_keys() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// Typed resolution with the loss-kind-dependent defaults applied
// (lambda 8 for mse / 128 otherwise, gamma 0.1 for hinge / 10 for log,
// learning rate 0.001 for mse / 0.01 otherwise).
TrainConfig resolve_train_config(const RunConfig& cfg);
SplitSpec resolve_split_spec(const RunConfig& cfg);
SynthSpec resolve_synth_spec(const RunConfig& cfg);

// The exact configuration a run used, as sorted key=value lines.
std::map<std::string, std::string> train_config_to_kv(const TrainConfig& cfg);
void write_resolved_config(const std::map<std::string, std::string>& kv, const std::string& path);

}  // namespace sampcf
