#include "mfg/io.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace mfg::io {

namespace {

using nlohmann::json;

json parse_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw SchemaError("invalid JSON");
  return j;
}

std::vector<double> require_array(const json& j, const char* key, size_t size) {
  if (!j.contains(key) || !j[key].is_array()) {
    throw SchemaError(std::string("missing array field: ") + key);
  }
  std::vector<double> out = j[key].get<std::vector<double>>();
  if (out.size() != size) {
    throw SchemaError(std::string("field has wrong length: ") + key);
  }
  return out;
}

int require_int(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number_integer()) {
    throw SchemaError(std::string("missing integer field: ") + key);
  }
  return j[key].get<int>();
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string policy_to_json(const Policy& policy) {
  json j;
  j["horizon"] = policy.horizon;
  j["num_states"] = policy.num_states;
  j["num_actions"] = policy.num_actions;
  j["probs"] = policy.probs;
  return j.dump(2);
}

Policy policy_from_json(const std::string& text) {
  const json j = parse_json(text);
  Policy p;
  p.horizon = require_int(j, "horizon");
  p.num_states = require_int(j, "num_states");
  p.num_actions = require_int(j, "num_actions");
  if (p.horizon < 0 || p.num_states <= 0 || p.num_actions <= 0) {
    throw SchemaError("policy dimensions out of range");
  }
  p.probs = require_array(j, "probs",
                          static_cast<size_t>(p.horizon + 1) * p.num_states * p.num_actions);
  try {
    p.validate();
  } catch (const GameError& e) {
    throw SchemaError(e.what());
  }
  return p;
}

std::string checkpoint_to_json(const omo::OmoIterate& it) {
  json j;
  j["horizon"] = it.d.horizon;
  j["num_states"] = it.d.num_states;
  j["num_actions"] = it.d.num_actions;
  j["d"] = it.d.mass;
  j["y"] = it.y;
  j["z"] = it.z;
  return j.dump(2);
}

omo::OmoIterate checkpoint_from_json(const std::string& text) {
  const json j = parse_json(text);
  const int T = require_int(j, "horizon");
  const int S = require_int(j, "num_states");
  const int A = require_int(j, "num_actions");
  if (T < 0 || S <= 0 || A <= 0) throw SchemaError("checkpoint dimensions out of range");
  omo::OmoIterate it;
  it.d = FlowTable(T, S, A);
  it.d.mass = require_array(j, "d", static_cast<size_t>(T + 1) * S * A);
  it.y = require_array(j, "y", static_cast<size_t>(S) * (T + 1));
  it.z = require_array(j, "z", static_cast<size_t>(T + 1) * S * A);
  return it;
}

CsvWriter::CsvWriter(std::string path, std::vector<std::string> header,
                     bool timestamp_comment)
    : path_(std::move(path)), width_(header.size()) {
  if (timestamp_comment) {
    buffer_ += "# generated ";
    std::time_t now = std::time(nullptr);
    char ts[32];
    std::strftime(ts, sizeof(ts), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    buffer_ += ts;
    buffer_ += '\n';
  }
  for (size_t i = 0; i < header.size(); ++i) {
    if (i) buffer_ += ',';
    buffer_ += header[i];
  }
  buffer_ += '\n';
  flush();
}

void CsvWriter::write_row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) throw SchemaError("CSV row width mismatch: " + path_);
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) buffer_ += ',';
    buffer_ += cells[i];
  }
  buffer_ += '\n';
  flush();
}

void CsvWriter::write_row_numeric(const std::vector<double>& cells) {
  std::vector<std::string> text;
  text.reserve(cells.size());
  for (double v : cells) text.push_back(format_double(v));
  write_row(text);
}

void CsvWriter::flush() {
  std::ofstream out(path_, first_ ? std::ios::trunc : std::ios::app);
  if (!out) throw SchemaError("cannot write: " + path_);
  out << buffer_;
  buffer_.clear();
  first_ = false;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = values.find(key);
  if (it == values.end()) return fallback;
  try {
    size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw SchemaError("config key '" + key + "' is not a number: " + it->second);
  }
}

int Config::get_int(const std::string& key, int fallback) const {
  auto it = values.find(key);
  if (it == values.end()) return fallback;
  try {
    size_t pos = 0;
    const int v = std::stoi(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw SchemaError("config key '" + key + "' is not an integer: " + it->second);
  }
}

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw SchemaError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      throw SchemaError("config line " + std::to_string(lineno) + ": empty key");
    }
    cfg.values[key] = value;
  }
  return cfg;
}

Config Config::load(const std::string& path) { return parse(read_file(path)); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot read: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw SchemaError("cannot write: " + path);
  out << content;
}

}  // namespace mfg::io
