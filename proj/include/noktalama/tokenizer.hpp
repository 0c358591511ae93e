#pragma once

// Vocabulary loading, rule-based pre-tokenization and greedy WordPiece.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "noktalama/labels.hpp"
#include "noktalama/normalization.hpp"

namespace noktalama {

using TokenId = std::int32_t;

/// Immutable WordPiece vocabulary. Ids are line numbers of the vocab file.
class Vocab {
 public:
  static constexpr std::string_view kDefaultUnk = "[UNK]";
  static constexpr std::string_view kDefaultPrefix = "##";

  /// Builds a vocabulary from tokens in id order. Throws DuplicateToken
  /// (1-based position) or MissingUnkToken.
  explicit Vocab(std::vector<std::string> tokens,
                 std::string unk_token = std::string(kDefaultUnk),
                 std::string continuation_prefix = std::string(kDefaultPrefix));

  std::size_t size() const { return tokens_.size(); }
  std::optional<TokenId> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }

  TokenId unk_id() const { return unk_id_; }
  const std::string& unk_token() const { return unk_token_; }
  const std::string& continuation_prefix() const { return prefix_; }
  const std::set<std::string>& special_tokens() const { return specials_; }
  /// Longest entry, in code points, with any continuation prefix removed.
  std::size_t max_piece_length() const { return max_piece_chars_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
  std::string unk_token_;
  std::string prefix_;
  std::set<std::string> specials_;
  TokenId unk_id_ = 0;
  std::size_t max_piece_chars_ = 0;
};

/// One token per line, LF terminated, line index = id. Throws IoError,
/// DuplicateToken(line) or MissingUnkToken.
Vocab load_vocab(const std::filesystem::path& path);
Vocab read_vocab(std::istream& in);

struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  bool operator==(const CharSpan&) const = default;
};

/// A punctuation-free, lowercased word piece of the source text.
struct WordUnit {
  std::string text;
  std::optional<PunctLabel> trailing_punct;
  CaseClass original_case = CaseClass::Lower;
  /// Code point offsets into the NFC form of the source.
  CharSpan char_span;
};

struct Token {
  std::string surface;
  bool is_continuation = false;
  TokenId vocab_id = 0;
  std::size_t word_index = 0;
  bool operator==(const Token&) const = default;
};

/// Splits on whitespace and on the eight punctuation marks. A mark becomes
/// the trailing_punct of the nearest preceding unit when that unit does not
/// carry a mark yet; otherwise (consecutive marks, or nothing before it) it is
/// dropped.
std::vector<WordUnit> pretokenize(std::string_view text);

inline constexpr std::size_t kMaxWordpieceChars = 100;

/// Greedy longest-match-first segmentation of one unit. Units longer than
/// kMaxWordpieceChars, or with an unmatchable position, become one unk token.
std::vector<Token> wordpiece(std::string_view unit_text, const Vocab& vocab,
                             std::size_t word_index = 0);

/// Strips the continuation prefix from continuation tokens.
std::string strip_continuation(const Token& token, std::string_view prefix);

}  // namespace noktalama
