#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mfg/game.hpp"
#include "mfg/omo.hpp"

// Serialization plumbing: policy / checkpoint JSON, CSV emission, and the
// flat key-value config format driving the CLI.
namespace mfg::io {

class SchemaError : public GameError {
 public:
  using GameError::GameError;
};

// Policy JSON: {"horizon": T, "num_states": S, "num_actions": A,
//               "probs": row-major (t,s,a) array}.
std::string policy_to_json(const Policy& policy);
Policy policy_from_json(const std::string& text);

// Checkpoint JSON adds flat "y" and "z" arrays in canonical index order.
std::string checkpoint_to_json(const omo::OmoIterate& it);
omo::OmoIterate checkpoint_from_json(const std::string& text);

// Floating-point fields serialize with 17 significant digits.
std::string format_double(double v);

// Minimal CSV writer: one writer per file, header row first, every row
// schema-checked against the header width.
class CsvWriter {
 public:
  CsvWriter(std::string path, std::vector<std::string> header,
            bool timestamp_comment = false);
  void write_row(const std::vector<std::string>& cells);
  void write_row_numeric(const std::vector<double>& cells);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  size_t width_;
  std::string buffer_;
  bool first_ = true;
  void flush();
};

// Flat typed key-value config: one "key = value" pair per line, '#' comments.
struct Config {
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const { return values.count(key) > 0; }
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;

  static Config parse(const std::string& text);
  static Config load(const std::string& path);
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace mfg::io
