#pragma once

// The two closed label alphabets carried by every token.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

#include "noktalama/normalization.hpp"

namespace noktalama {

/// Punctuation mark that follows a token. Enumerator order is the
/// alphabet order used for deterministic tie-breaking.
enum class PunctLabel : std::uint8_t {
  Period,
  Comma,
  Exclamation,
  Question,
  Semicolon,
  Colon,
  Hyphen,
  Apostrophe,
  None,
};

enum class CapTag : std::uint8_t { One, Cap, Non };

inline constexpr std::size_t kPunctLabelCount = 9;
inline constexpr std::size_t kCapTagCount = 3;

inline constexpr std::array<PunctLabel, kPunctLabelCount> kAllPunctLabels = {
    PunctLabel::Period,    PunctLabel::Comma,  PunctLabel::Exclamation,
    PunctLabel::Question,  PunctLabel::Semicolon, PunctLabel::Colon,
    PunctLabel::Hyphen,    PunctLabel::Apostrophe, PunctLabel::None};

inline constexpr std::array<CapTag, kCapTagCount> kAllCapTags = {
    CapTag::One, CapTag::Cap, CapTag::Non};

inline constexpr std::array<std::string_view, kPunctLabelCount> kPunctLabelNames = {
    "period", "comma", "exclamation", "question", "semicolon",
    "colon",  "hyphen", "apostrophe", "non"};

inline constexpr std::array<std::string_view, kCapTagCount> kCapTagNames = {
    "One", "Cap", "non"};

/// The marks, in PunctLabel order (None excluded).
inline constexpr std::array<char, kPunctLabelCount - 1> kPunctMarks = {
    '.', ',', '!', '?', ';', ':', '-', '\''};

constexpr std::size_t index_of(PunctLabel l) { return static_cast<std::size_t>(l); }
constexpr std::size_t index_of(CapTag t) { return static_cast<std::size_t>(t); }

constexpr std::string_view to_string(PunctLabel l) { return kPunctLabelNames[index_of(l)]; }
constexpr std::string_view to_string(CapTag t) { return kCapTagNames[index_of(t)]; }

constexpr std::optional<PunctLabel> parse_punct_label(std::string_view s) {
  for (std::size_t i = 0; i < kPunctLabelCount; ++i) {
    if (kPunctLabelNames[i] == s) return static_cast<PunctLabel>(i);
  }
  return std::nullopt;
}

constexpr std::optional<CapTag> parse_cap_tag(std::string_view s) {
  for (std::size_t i = 0; i < kCapTagCount; ++i) {
    if (kCapTagNames[i] == s) return static_cast<CapTag>(i);
  }
  return std::nullopt;
}

constexpr std::optional<PunctLabel> punct_from_char(char32_t c) {
  for (std::size_t i = 0; i < kPunctMarks.size(); ++i) {
    if (static_cast<char32_t>(kPunctMarks[i]) == c) return static_cast<PunctLabel>(i);
  }
  return std::nullopt;
}

constexpr bool is_punct_mark(char32_t c) { return punct_from_char(c).has_value(); }

/// Mark character for a label; None has no character.
constexpr std::optional<char> punct_char(PunctLabel l) {
  if (l == PunctLabel::None) return std::nullopt;
  return kPunctMarks[index_of(l)];
}

/// Period, exclamation, semicolon and question mark close a segment.
constexpr bool is_segment_boundary(PunctLabel l) {
  return l == PunctLabel::Period || l == PunctLabel::Exclamation ||
         l == PunctLabel::Semicolon || l == PunctLabel::Question;
}

constexpr CapTag cap_tag_for(CaseClass c) {
  switch (c) {
    case CaseClass::FirstCap:
      return CapTag::One;
    case CaseClass::AllCaps:
      return CapTag::Cap;
    case CaseClass::Lower:
      return CapTag::Non;
  }
  return CapTag::Non;
}

constexpr CaseClass case_class_for(CapTag t) {
  switch (t) {
    case CapTag::One:
      return CaseClass::FirstCap;
    case CapTag::Cap:
      return CaseClass::AllCaps;
    case CapTag::Non:
      return CaseClass::Lower;
  }
  return CaseClass::Lower;
}

}  // namespace noktalama

#include <vector>

namespace noktalama {

/// Parallel label sequences for one token sequence.
struct Prediction {
  std::vector<PunctLabel> punct;
  std::vector<CapTag> caps;
  bool operator==(const Prediction&) const = default;
};

}  // namespace noktalama
