#include "noktalama/config.hpp"

#include <charconv>
#include <fstream>

#include "noktalama/error.hpp"
#include "noktalama/protocol.hpp"

namespace noktalama {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T v{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(key, "expected a number, got '" + value + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(key, "expected true or false, got '" + value + "'");
}

Rational parse_fraction(const std::string& key, const std::string& value) {
  try {
    return Rational::parse(value);
  } catch (const InvalidArgument& e) {
    throw ConfigError(key, e.what());
  }
}

}  // namespace

void Config::set(const std::string& key, const std::string& value) {
  if (key == "vocab" || key == "vocab_path") {
    vocab_path = value;
  } else if (key == "max_len") {
    max_len = parse_number<std::size_t>(key, value);
  } else if (key == "reserved_specials") {
    reserved_specials = parse_number<std::size_t>(key, value);
  } else if (key == "train_frac") {
    split.train = parse_fraction(key, value);
  } else if (key == "test_frac") {
    split.test = parse_fraction(key, value);
  } else if (key == "valid_frac") {
    split.valid = parse_fraction(key, value);
  } else if (key == "seed") {
    split.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "backend") {
    if (value == "baseline") {
      backend = BackendKind::Baseline;
    } else if (value == "external") {
      backend = BackendKind::External;
    } else if (value == "oracle") {
      backend = BackendKind::Oracle;
    } else {
      throw ConfigError(key, "expected baseline, external or oracle, got '" + value + "'");
    }
  } else if (key == "endpoint") {
    endpoint = value;
  } else if (key == "model_path") {
    model_path = value;
  } else if (key == "timeout_ms") {
    timeout = std::chrono::milliseconds(parse_number<std::int64_t>(key, value));
  } else if (key == "format") {
    if (value == "csv") {
      format = CorpusFormat::Csv;
    } else if (value == "jsonl") {
      format = CorpusFormat::Jsonl;
    } else {
      throw ConfigError(key, "expected csv or jsonl, got '" + value + "'");
    }
  } else if (key == "column") {
    column = value;
  } else if (key == "alpha") {
    try {
      alpha = std::stod(value);
    } catch (const std::exception&) {
      throw ConfigError(key, "expected a number, got '" + value + "'");
    }
  } else if (key == "workers") {
    workers = parse_number<std::size_t>(key, value);
  } else if (key == "strict") {
    strict = parse_bool(key, value);
  } else if (key == "join_after_apostrophe") {
    render.join_after_apostrophe = parse_bool(key, value);
  } else if (key.rfind("space_after.", 0) == 0) {
    const auto label = parse_punct_label(key.substr(12));
    if (!label) throw ConfigError(key, "unknown punctuation label");
    render.space_after_punct[index_of(*label)] = parse_bool(key, value);
  } else {
    throw ConfigError(key, "unknown key");
  }
}

void Config::validate() const {
  if (max_len < 2) throw ConfigError("max_len", "must be at least 2");
  if (reserved_specials >= max_len || max_len - reserved_specials < 2) {
    throw ConfigError("reserved_specials", "leaves fewer than 2 content tokens");
  }
  try {
    split.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError("train_frac", e.what());
  }
  if (!(alpha > 0)) throw ConfigError("alpha", "must be positive");
  if (timeout.count() <= 0) throw ConfigError("timeout_ms", "must be positive");
  if (column.empty()) throw ConfigError("column", "must not be empty");
  if (backend == BackendKind::External && !endpoint.empty()) {
    try {
      (void)Endpoint::parse(endpoint);
    } catch (const InvalidArgument& e) {
      throw ConfigError("endpoint", e.what());
    }
  }
}

void read_config(std::istream& in, Config& config) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(number), "expected key = value");
    }
    config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void load_config_file(const std::filesystem::path& path, Config& config) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  read_config(in, config);
}

}  // namespace noktalama
