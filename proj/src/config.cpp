#include "zesrec/config.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace zesrec {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

const std::map<std::string, std::string>& RunConfig::defaults() {
  static const std::map<std::string, std::string> d = {
      // data
      {"source_interactions", ""},
      {"source_embeddings", ""},
      {"source_descriptions", ""},
      {"target_interactions", ""},
      {"target_embeddings", ""},
      {"target_descriptions", ""},
      {"checkpoint", ""},
      {"out", "out"},
      {"strict_items", "true"},
      {"split_mode", "ratio_80_20"},
      // model
      {"model", "zesrec-g"},
      {"dim", "64"},
      {"tcn_layers", "2"},
      {"tcn_kernel", "3"},
      {"max_history", "50"},
      {"lambda_u", "1.0"},
      {"lambda_v", "1.0"},
      // TrainConfig
      {"optimizer", "adam"},
      {"learning_rate", "0.001"},
      {"beta1", "0.9"},
      {"beta2", "0.999"},
      {"eps", "1e-8"},
      {"epochs", "10"},
      {"batch_size", "32"},
      {"seed", "0"},
      {"user_offset_mode", "fixed_zero"},
      // evaluation
      {"k", "20"},
      {"exclude_seen", "false"},
      {"first_day", "false"},
      {"incremental_sizes", "2500,5000,10000"},
      {"incremental_models", "gru4rec"},
      {"case_context", "5"},
      {"case_k_query", "3"},
      {"case_filter", "topk"},
      // gen-synthetic
      {"syn_source_items", "200"},
      {"syn_target_items", "200"},
      {"syn_source_users", "2000"},
      {"syn_target_users", "500"},
      {"syn_content_dim", "32"},
      {"syn_clusters", "10"},
      {"syn_min_length", "25"},
      {"syn_max_length", "35"},
      {"syn_follow_prob", "0.8"},
      {"syn_noise", "0.35"},
  };
  return d;
}

RunConfig::RunConfig() : values_(defaults()) {}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  load(in, path);
}

void RunConfig::load(std::istream& in, const std::string& source_name) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source_name, line_no, "expected key = value");
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ParseError(source_name, line_no, e.what());
    }
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second = value;
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

std::int64_t RunConfig::get_int(const std::string& key) const {
  const auto& v = get(key);
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  const auto& v = get(key);
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

double RunConfig::get_double(const std::string& key) const {
  const auto& v = get(key);
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used == v.size()) return out;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + v + "'");
}

bool RunConfig::get_bool(const std::string& key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

std::vector<std::string> RunConfig::get_list(const std::string& key) const {
  std::vector<std::string> out;
  std::stringstream ss(get(key));
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::size_t> RunConfig::get_sizes(const std::string& key) const {
  std::vector<std::size_t> out;
  for (const auto& item : get_list(key)) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size()) throw ConfigError(key + ": bad size '" + item + "'");
    out.push_back(v);
  }
  return out;
}

void RunConfig::require_path(const std::string& key) const {
  const auto& p = get(key);
  if (p.empty()) throw ConfigError("config key '" + key + "' is required");
  if (!std::filesystem::exists(p)) throw ConfigError(key + ": no such file " + p);
}

TrainConfig RunConfig::train_config() const {
  if (get("optimizer") != "adam") throw ConfigError("optimizer: only 'adam' is supported");
  TrainConfig c;
  c.optimizer.learning_rate = get_double("learning_rate");
  c.optimizer.beta1 = get_double("beta1");
  c.optimizer.beta2 = get_double("beta2");
  c.optimizer.eps = get_double("eps");
  c.epochs = static_cast<int>(get_int("epochs"));
  c.batch_size = static_cast<int>(get_int("batch_size"));
  c.seed = get_u64("seed");
  const auto& mode = get("user_offset_mode");
  if (mode == "fixed_zero") {
    c.user_offset_mode = UserOffsetMode::kFixedZero;
  } else if (mode == "free") {
    c.user_offset_mode = UserOffsetMode::kFree;
  } else {
    throw ConfigError("user_offset_mode: expected fixed_zero or free");
  }
  c.max_history = static_cast<std::size_t>(get_int("max_history"));
  c.eval_k = static_cast<int>(get_int("k"));
  if (c.optimizer.learning_rate <= 0) throw ConfigError("learning_rate must be positive");
  if (c.epochs < 1) throw ConfigError("epochs must be at least 1");
  return c;
}

EncoderConfig RunConfig::encoder_config(EncoderKind kind) const {
  EncoderConfig e;
  e.kind = kind;
  e.dim = static_cast<int>(get_int("dim"));
  e.tcn_layers = static_cast<int>(get_int("tcn_layers"));
  e.tcn_kernel = static_cast<int>(get_int("tcn_kernel"));
  return e;
}

Hyper RunConfig::hyper() const {
  Hyper h{get_double("lambda_u"), get_double("lambda_v")};
  if (h.lambda_u < 0 || h.lambda_v < 0) throw ConfigError("lambda_u and lambda_v must be nonnegative");
  return h;
}

SyntheticConfig RunConfig::synthetic_config() const {
  SyntheticConfig s;
  s.source_items = get_u64("syn_source_items");
  s.target_items = get_u64("syn_target_items");
  s.source_users = get_u64("syn_source_users");
  s.target_users = get_u64("syn_target_users");
  s.content_dim = static_cast<std::uint32_t>(get_u64("syn_content_dim"));
  s.clusters = get_u64("syn_clusters");
  s.min_length = get_u64("syn_min_length");
  s.max_length = get_u64("syn_max_length");
  s.follow_prob = get_double("syn_follow_prob");
  s.noise = get_double("syn_noise");
  return s;
}

std::string RunConfig::dump() const {
  std::ostringstream os;
  for (const auto& [k, v] : values_) os << k << " = " << v << '\n';
  return os.str();
}

}  // namespace zesrec
