#pragma once

// Corpus ingestion, label extraction, windowing, splitting and label
// distribution statistics.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "noktalama/labels.hpp"
#include "noktalama/tokenizer.hpp"

namespace noktalama {

struct Document {
  std::string id;
  std::string text;
};

enum class CorpusFormat { Csv, Jsonl };

/// Reads one document per record, keeping only `column`. Document ids are
/// zero-based record indices. Throws IoError, MissingColumn, MalformedRecord
/// (1-based line) or InvalidUtf8.
std::vector<Document> ingest(const std::filesystem::path& path, CorpusFormat format,
                             const std::string& column = "content");
std::vector<Document> ingest(std::istream& in, CorpusFormat format,
                             const std::string& column = "content");

/// Streaming variant; `sink` is called once per record in input order.
void for_each_document(std::istream& in, CorpusFormat format, const std::string& column,
                       const std::function<void(Document)>& sink);

/// A whole document after tokenization, labels aligned with tokens.
struct LabeledDocument {
  std::string doc_id;
  std::vector<WordUnit> units;
  std::vector<Token> tokens;
  std::vector<PunctLabel> punct;
  std::vector<CapTag> caps;
};

/// Punctuation label on each unit's last token, case tag on its first.
LabeledDocument extract_labels(std::vector<WordUnit> units, const Vocab& vocab);
LabeledDocument label_document(const Document& doc, const Vocab& vocab);

struct LabeledSegment {
  std::string doc_id;
  std::vector<Token> tokens;
  std::vector<PunctLabel> punct;
  std::vector<CapTag> caps;
  CharSpan source_span;
  /// Index of tokens[0] within its document.
  std::size_t first_token = 0;
};

struct TokenRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool operator==(const TokenRange&) const = default;
};

inline constexpr std::size_t kDefaultMaxLen = 512;
inline constexpr std::size_t kDefaultReservedSpecials = 2;

/// Window boundaries: the first window is [0, max_len); each following one
/// starts right after the last period/exclamation/semicolon/question label
/// inside the previous window, or at its end when there is none. Throws
/// InvalidArgument when max_len < 2.
std::vector<TokenRange> segment_bounds(const std::vector<PunctLabel>& punct,
                                       std::size_t max_len);
std::vector<LabeledSegment> segment(const LabeledDocument& doc,
                                    std::size_t max_len = kDefaultMaxLen);
LabeledSegment make_segment(const LabeledDocument& doc, TokenRange range);

/// Non-negative rational with a positive denominator.
struct Rational {
  std::uint64_t num = 0;
  std::uint64_t den = 1;
  /// Parses "0.7", "7/10" or "1". Throws InvalidArgument.
  static Rational parse(std::string_view text);
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string to_string() const;
  /// floor(n * this)
  std::size_t floor_times(std::size_t n) const;
};

struct SplitSpec {
  Rational train{7, 10};
  Rational test{2, 10};
  Rational valid{1, 10};
  std::uint64_t seed = 42;
  /// Throws InvalidArgument unless each fraction is in [0,1] and they sum to 1.
  void validate() const;
};

/// xorshift64* seeded through splitmix64. The document shuffle is a
/// Fisher-Yates pass from the back with j = next() % (i + 1).
class Xorshift64Star {
 public:
  explicit Xorshift64Star(std::uint64_t seed);
  std::uint64_t next();

 private:
  std::uint64_t state_;
};

template <typename T>
struct Splits {
  std::vector<T> train;
  std::vector<T> test;
  std::vector<T> valid;
};

inline constexpr std::array<std::string_view, 3> kSplitNames = {"train", "test", "validation"};

/// Seeded shuffle, then contiguous cuts at floor(train*n) and
/// floor((train+test)*n).
Splits<Document> split_dataset(std::vector<Document> docs, const SplitSpec& spec);
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

/// Per-split counts of each punctuation mark.
struct DistributionTable {
  std::vector<std::string> split_names;
  std::vector<std::array<std::uint64_t, kPunctLabelCount - 1>> counts;

  std::uint64_t count(std::string_view split, PunctLabel label) const;
  void print(std::ostream& out) const;
  std::string to_json() const;
};

/// Counts non-None punctuation labels, each source token position once even
/// when overlapping windows cover it twice.
DistributionTable distribution(
    const std::vector<std::pair<std::string, std::vector<LabeledSegment>>>& splits);

/// Windows over an unpunctuated, lowercased paragraph.
struct InferencePlan {
  LabeledDocument document;  // labels all None / Non
  std::vector<TokenRange> windows;
};

/// Removes every punctuation mark (apostrophes join their neighbours, the
/// other marks become spaces), lowercases, tokenizes and cuts windows of
/// max_len tokens with stride max_len / 2.
InferencePlan prepare_inference(std::string_view text, const Vocab& vocab,
                                std::size_t max_len = kDefaultMaxLen);
std::string strip_punctuation(std::string_view text);
std::vector<TokenRange> inference_windows(std::size_t n_tokens, std::size_t max_len);

/// For every token keeps the label from the window where it sits farthest
/// from a window edge (earliest window on ties). Throws LengthMismatch.
Prediction merge_window_predictions(const InferencePlan& plan,
                                    const std::vector<Prediction>& window_predictions);

/// One JSON object per segment:
/// {"doc_id":...,"tokens":[...],"punct":[...],"caps":[...]}
std::string segment_to_json(const LabeledSegment& segment);
void write_segments_jsonl(std::ostream& out, const std::vector<LabeledSegment>& segments);
/// Inverse of write_segments_jsonl; token ids come from `vocab`. Throws
/// MalformedRecord(line).
std::vector<LabeledSegment> read_segments_jsonl(std::istream& in, const Vocab& vocab);
std::vector<LabeledSegment> read_segments_jsonl(const std::filesystem::path& path,
                                                const Vocab& vocab);

}  // namespace noktalama
