#pragma once

#include <string>

#include "json.hpp"
#include "mog/nn/encoder.hpp"

namespace mog::train {

struct ExperimentConfig {
  nn::EncoderConfig encoder;
  std::string task = "reverse";  // copy | reverse | sort | file
  std::string data;              // file task: prefix of <data>.src / <data>.tgt
  std::size_t vocab_size = 20;
  std::size_t min_len = 3;
  std::size_t max_len = 12;
  std::size_t train_size = 10000;
  std::size_t eval_size = 200;
  std::size_t batch_tokens = 400;
  std::size_t max_steps = 3000;
  std::size_t warmup = 400;
  std::size_t beam = 1;
  double alpha = 0.0;
  std::size_t eval_interval = 250;
  std::string output_dir = "runs/default";
  std::uint64_t seed = 1;

  void validate() const;
};

/// Flat `key = value` lines; `#` starts a comment. Unknown keys, repeated keys
/// and malformed values are errors. Missing keys keep their defaults.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string to_text(const ExperimentConfig& cfg);
nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);

}  // namespace mog::train
