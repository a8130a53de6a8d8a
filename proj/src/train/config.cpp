#include "mog/train/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mog::train {

void ExperimentConfig::validate() const {
  encoder.validate();
  if (warmup < 1) throw std::invalid_argument("warmup must be >= 1");
  if (beam < 1) throw std::invalid_argument("beam must be >= 1");
  if (eval_interval < 1) throw std::invalid_argument("eval_interval must be >= 1");
  if (batch_tokens < 1) throw std::invalid_argument("batch_tokens must be >= 1");
  if (task == "file" && data.empty()) throw std::invalid_argument("task = file needs data = <prefix>");
  if (task != "file" && task != "copy" && task != "reverse" && task != "sort")
    throw std::invalid_argument("unknown task '" + task + "'");
  if (min_len < 1 || min_len > max_len) throw std::invalid_argument("lengths need 1 <= min_len <= max_len");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw std::invalid_argument(key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument(key + ": expected a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw std::invalid_argument(key + ": expected true or false, got '" + v + "'");
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"task", [](auto& c, auto&, auto& v) { c.task = v; }},
      {"data", [](auto& c, auto&, auto& v) { c.data = v; }},
      {"vocab_size", [](auto& c, auto& k, auto& v) { c.vocab_size = to_size(k, v); }},
      {"min_len", [](auto& c, auto& k, auto& v) { c.min_len = to_size(k, v); }},
      {"max_len", [](auto& c, auto& k, auto& v) { c.max_len = to_size(k, v); }},
      {"train_size", [](auto& c, auto& k, auto& v) { c.train_size = to_size(k, v); }},
      {"eval_size", [](auto& c, auto& k, auto& v) { c.eval_size = to_size(k, v); }},
      {"architecture", [](auto& c, auto&, auto& v) { c.encoder.architecture = nn::parse_architecture(v); }},
      {"layers", [](auto& c, auto& k, auto& v) { c.encoder.layers = to_size(k, v); }},
      {"model_dim", [](auto& c, auto& k, auto& v) { c.encoder.model_dim = to_size(k, v); }},
      {"heads", [](auto& c, auto& k, auto& v) { c.encoder.heads = to_size(k, v); }},
      {"ffn_dim", [](auto& c, auto& k, auto& v) { c.encoder.ffn_dim = to_size(k, v); }},
      {"fusion", [](auto& c, auto&, auto& v) { c.encoder.fusion = nn::parse_fusion(v); }},
      {"half_dim", [](auto& c, auto& k, auto& v) { c.encoder.half_dim = to_bool(k, v); }},
      {"shared_qkv", [](auto& c, auto& k, auto& v) { c.encoder.shared_qkv = to_bool(k, v); }},
      {"position_encoding", [](auto& c, auto&, auto& v) { c.encoder.position_encoding = nn::parse_position_kind(v); }},
      {"dropout", [](auto& c, auto& k, auto& v) { c.encoder.dropout = to_double(k, v); }},
      {"batch_tokens", [](auto& c, auto& k, auto& v) { c.batch_tokens = to_size(k, v); }},
      {"max_steps", [](auto& c, auto& k, auto& v) { c.max_steps = to_size(k, v); }},
      {"warmup", [](auto& c, auto& k, auto& v) { c.warmup = to_size(k, v); }},
      {"beam", [](auto& c, auto& k, auto& v) { c.beam = to_size(k, v); }},
      {"alpha", [](auto& c, auto& k, auto& v) { c.alpha = to_double(k, v); }},
      {"eval_interval", [](auto& c, auto& k, auto& v) { c.eval_interval = to_size(k, v); }},
      {"output_dir", [](auto& c, auto&, auto& v) { c.output_dir = v; }},
      {"seed", [](auto& c, auto& k, auto& v) {
         c.seed = to_size(k, v);
         c.encoder.seed = c.seed;
       }},
  };
  return table;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw std::invalid_argument(where + "expected key = value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    auto it = setters().find(key);
    if (it == setters().end()) throw std::invalid_argument(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw std::invalid_argument(where + "key '" + key + "' given twice");
    if (value.empty()) throw std::invalid_argument(where + "empty value for '" + key + "'");
    try {
      it->second(cfg, key, value);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"task", c.task},
          {"data", c.data},
          {"vocab_size", c.vocab_size},
          {"min_len", c.min_len},
          {"max_len", c.max_len},
          {"train_size", c.train_size},
          {"eval_size", c.eval_size},
          {"architecture", nn::to_string(c.encoder.architecture)},
          {"layers", c.encoder.layers},
          {"model_dim", c.encoder.model_dim},
          {"heads", c.encoder.heads},
          {"ffn_dim", c.encoder.ffn_dim},
          {"fusion", nn::to_string(c.encoder.fusion)},
          {"half_dim", c.encoder.half_dim},
          {"shared_qkv", c.encoder.shared_qkv},
          {"position_encoding", nn::to_string(c.encoder.position_encoding)},
          {"dropout", c.encoder.dropout},
          {"batch_tokens", c.batch_tokens},
          {"max_steps", c.max_steps},
          {"warmup", c.warmup},
          {"beam", c.beam},
          {"alpha", c.alpha},
          {"eval_interval", c.eval_interval},
          {"output_dir", c.output_dir},
          {"seed", c.seed}};
}

namespace {

std::string json_to_text(const nlohmann::json& j) {
  std::string out;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_string()) {
      out += key + " = " + value.dump() + "\n";
    } else if (!value.get<std::string>().empty()) {
      out += key + " = " + value.get<std::string>() + "\n";
    }
  }
  return out;
}

}  // namespace

std::string to_text(const ExperimentConfig& cfg) { return json_to_text(to_json(cfg)); }

ExperimentConfig config_from_json(const nlohmann::json& j) { return parse_config(json_to_text(j)); }

}  // namespace mog::train
