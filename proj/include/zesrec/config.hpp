#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "zesrec/baselines.hpp"
#include "zesrec/data_model.hpp"
#include "zesrec/encoders.hpp"
#include "zesrec/evaluation.hpp"
#include "zesrec/model.hpp"
#include "zesrec/synthetic.hpp"

namespace zesrec {

/// Flat `key = value` settings with `#` comments. Every key has a default;
/// unknown keys are rejected so typos cannot silently fall back.
class RunConfig {
 public:
  RunConfig();

  void load_file(const std::string& path);
  void load(std::istream& in, const std::string& source_name);
  void set(const std::string& key, const std::string& value);

  const std::string& get(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<std::size_t> get_sizes(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;

  /// Throws ConfigError if a non-empty path key names a missing file.
  void require_path(const std::string& key) const;

  TrainConfig train_config() const;
  EncoderConfig encoder_config(EncoderKind kind) const;
  Hyper hyper() const;
  SyntheticConfig synthetic_config() const;

  std::string dump() const;
  static const std::map<std::string, std::string>& defaults();

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace zesrec
