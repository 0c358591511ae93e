#include "noktalama/tokenizer.hpp"

#include <fstream>

#include "noktalama/error.hpp"

namespace noktalama {

namespace {

bool looks_special(std::string_view token) {
  return token.size() >= 3 && token.front() == '[' && token.back() == ']';
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return !prefix.empty() && s.substr(0, prefix.size()) == prefix;
}

}  // namespace

Vocab::Vocab(std::vector<std::string> tokens, std::string unk_token,
             std::string continuation_prefix)
    : tokens_(std::move(tokens)),
      unk_token_(std::move(unk_token)),
      prefix_(std::move(continuation_prefix)) {
  ids_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    const std::string& t = tokens_[i];
    if (!ids_.emplace(t, static_cast<TokenId>(i)).second) throw DuplicateToken(i + 1, t);
    if (looks_special(t)) specials_.insert(t);
    std::string_view piece = t;
    if (starts_with(piece, prefix_)) piece.remove_prefix(prefix_.size());
    if (is_valid_utf8(piece)) {
      max_piece_chars_ = std::max(max_piece_chars_, decode_utf8(piece).size());
    }
  }
  const auto unk = find(unk_token_);
  if (!unk) throw MissingUnkToken(unk_token_);
  unk_id_ = *unk;
  specials_.insert(unk_token_);
}

std::optional<TokenId> Vocab::find(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

Vocab read_vocab(std::istream& in) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) tokens.push_back(line);
  if (in.bad()) throw IoError("failed reading vocabulary");
  return Vocab(std::move(tokens));
}

Vocab load_vocab(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vocabulary file " + path.string());
  return read_vocab(in);
}

std::vector<WordUnit> pretokenize(std::string_view text) {
  const std::u32string source = nfc(decode_utf8(text));
  std::vector<WordUnit> units;
  // A mark may attach to the last unit until another mark has done so.
  bool last_unit_open = false;
  std::size_t word_start = 0;
  std::u32string word;

  auto flush = [&](std::size_t end, std::optional<PunctLabel> punct) {
    WordUnit unit;
    unit.original_case = classify_case(word);
    unit.text = encode_utf8(turkish_lower(word));
    unit.trailing_punct = punct;
    unit.char_span = {word_start, end};
    units.push_back(std::move(unit));
    word.clear();
    last_unit_open = !punct.has_value();
  };

  for (std::size_t i = 0; i < source.size(); ++i) {
    const char32_t c = source[i];
    if (is_whitespace(c)) {
      if (!word.empty()) flush(i, std::nullopt);
      continue;
    }
    if (const auto mark = punct_from_char(c)) {
      if (!word.empty()) {
        flush(i, mark);
      } else if (last_unit_open) {
        units.back().trailing_punct = mark;
        last_unit_open = false;
      }
      continue;
    }
    if (word.empty()) word_start = i;
    word.push_back(c);
  }
  if (!word.empty()) flush(source.size(), std::nullopt);
  return units;
}

std::vector<Token> wordpiece(std::string_view unit_text, const Vocab& vocab,
                             std::size_t word_index) {
  const std::u32string chars = decode_utf8(unit_text);
  const std::string& prefix = vocab.continuation_prefix();
  auto unknown = [&] {
    return std::vector<Token>{Token{vocab.unk_token(), false, vocab.unk_id(), word_index}};
  };
  if (chars.empty() || chars.size() > kMaxWordpieceChars) return unknown();

  std::vector<Token> out;
  std::size_t start = 0;
  while (start < chars.size()) {
    std::size_t end = std::min(chars.size(), start + vocab.max_piece_length());
    std::optional<Token> match;
    for (; end > start; --end) {
      std::string candidate = encode_utf8(chars.substr(start, end - start));
      if (start > 0) {
        candidate.insert(0, prefix);
      } else if (starts_with(candidate, prefix)) {
        continue;  // a word-initial piece never reads as a continuation
      }
      if (const auto id = vocab.find(candidate)) {
        match = Token{std::move(candidate), start > 0, *id, word_index};
        break;
      }
    }
    if (!match) return unknown();
    out.push_back(std::move(*match));
    start = end;
  }
  return out;
}

std::string strip_continuation(const Token& token, std::string_view prefix) {
  std::string_view s = token.surface;
  if (token.is_continuation && starts_with(s, prefix)) s.remove_prefix(prefix.size());
  return std::string(s);
}

}  // namespace noktalama
