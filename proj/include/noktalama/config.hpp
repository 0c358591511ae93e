#pragma once

// Flat key = value configuration shared by the CLI commands.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>

#include "noktalama/corpus.hpp"
#include "noktalama/reconstruction.hpp"

namespace noktalama {

enum class BackendKind { Baseline, External, Oracle };

struct Config {
  std::string vocab_path;
  std::size_t max_len = kDefaultMaxLen;
  std::size_t reserved_specials = kDefaultReservedSpecials;
  SplitSpec split;
  BackendKind backend = BackendKind::Baseline;
  std::string endpoint;
  std::string model_path;
  std::chrono::milliseconds timeout{30000};
  CorpusFormat format = CorpusFormat::Jsonl;
  std::string column = "content";
  double alpha = 1.0;
  std::size_t workers = 0;  // 0: hardware concurrency
  bool strict = false;
  RenderPolicy render;

  /// Tokens available for content once the delimiter slots are reserved.
  std::size_t content_budget() const { return max_len - reserved_specials; }

  /// Sets one key. Throws ConfigError naming the key.
  void set(const std::string& key, const std::string& value);
  /// Throws ConfigError naming the first offending field.
  void validate() const;
};

/// Parses "key = value" lines; '#' starts a comment. Throws ConfigError.
void read_config(std::istream& in, Config& config);
void load_config_file(const std::filesystem::path& path, Config& config);

}  // namespace noktalama
