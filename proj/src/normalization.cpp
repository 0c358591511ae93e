#include "noktalama/normalization.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <algorithm>

#include "noktalama/error.hpp"

namespace noktalama {

namespace {

constexpr char32_t kCapitalDottedI = 0x0130;
constexpr char32_t kSmallDotlessI = 0x0131;

bool is_ascii(std::string_view text) {
  return std::all_of(text.begin(), text.end(),
                     [](char c) { return static_cast<unsigned char>(c) < 0x80; });
}

bool is_cased(char32_t c) { return is_upper_char(c) || is_lower_char(c); }

}  // namespace

std::string_view to_string(CaseClass c) {
  switch (c) {
    case CaseClass::AllCaps:
      return "AllCaps";
    case CaseClass::FirstCap:
      return "FirstCap";
    case CaseClass::Lower:
      return "Lower";
  }
  return "?";
}

std::u32string decode_utf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const int32_t length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    const int32_t start = i;
    UChar32 c;
    U8_NEXT(s, i, length, c);
    if (c < 0) throw InvalidUtf8(static_cast<std::size_t>(start));
    out.push_back(static_cast<char32_t>(c));
  }
  return out;
}

bool is_valid_utf8(std::string_view text) {
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const int32_t length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    if (c < 0) return false;
  }
  return true;
}

void append_utf8(std::string& out, char32_t c) {
  uint8_t buf[U8_MAX_LENGTH];
  int32_t n = 0;
  U8_APPEND_UNSAFE(buf, n, static_cast<UChar32>(c));
  out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
}

std::string encode_utf8(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t c : text) append_utf8(out, c);
  return out;
}

std::string nfc(std::string_view text) {
  if (is_ascii(text)) return std::string(text);
  if (!is_valid_utf8(text)) decode_utf8(text);  // throws with the offset
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");
  const icu::UnicodeString source = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  if (normalizer->isNormalized(source, status) && U_SUCCESS(status)) {
    return std::string(text);
  }
  status = U_ZERO_ERROR;
  const icu::UnicodeString normalized = normalizer->normalize(source, status);
  if (U_FAILURE(status)) throw Error("NFC normalization failed");
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

std::u32string nfc(std::u32string_view text) {
  if (std::all_of(text.begin(), text.end(), [](char32_t c) { return c < 0x80; })) {
    return std::u32string(text);
  }
  return decode_utf8(nfc(encode_utf8(text)));
}

bool is_whitespace(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)); }

bool is_upper_char(char32_t c) {
  const auto u = static_cast<UChar32>(c);
  return u_isupper(u) || u_istitle(u);
}

bool is_lower_char(char32_t c) { return u_islower(static_cast<UChar32>(c)); }

char32_t turkish_lower_char(char32_t c) {
  if (c == kCapitalDottedI) return U'i';
  if (c == U'I') return kSmallDotlessI;
  if (c < 0x80) return (c >= U'A' && c <= U'Z') ? c + 32 : c;
  return static_cast<char32_t>(u_tolower(static_cast<UChar32>(c)));
}

char32_t turkish_upper_char(char32_t c) {
  if (c == U'i') return kCapitalDottedI;
  if (c == kSmallDotlessI) return U'I';
  if (c < 0x80) return (c >= U'a' && c <= U'z') ? c - 32 : c;
  return static_cast<char32_t>(u_toupper(static_cast<UChar32>(c)));
}

std::u32string turkish_lower(std::u32string_view text) {
  std::u32string out = nfc(text);
  for (char32_t& c : out) c = turkish_lower_char(c);
  return out;
}

std::u32string turkish_upper(std::u32string_view text) {
  std::u32string out = nfc(text);
  for (char32_t& c : out) c = turkish_upper_char(c);
  return out;
}

std::string turkish_lower(std::string_view text) {
  return encode_utf8(turkish_lower(decode_utf8(text)));
}

std::string turkish_upper(std::string_view text) {
  return encode_utf8(turkish_upper(decode_utf8(text)));
}

CaseClass classify_case(std::u32string_view word) {
  if (word.empty()) throw EmptyWord();
  const std::u32string normalized = nfc(word);
  std::size_t cased = 0;
  std::size_t upper = 0;
  for (char32_t c : normalized) {
    if (!is_cased(c)) continue;
    ++cased;
    if (is_upper_char(c)) ++upper;
  }
  if (upper == 0) return CaseClass::Lower;
  if (cased == 1) return CaseClass::FirstCap;
  if (upper == cased) return CaseClass::AllCaps;
  return CaseClass::FirstCap;  // first-upper-rest-lower, or coerced mixed case
}

CaseClass classify_case(std::string_view word) {
  if (word.empty()) throw EmptyWord();
  return classify_case(decode_utf8(word));
}

std::u32string apply_case(std::u32string_view word, CaseClass cls) {
  if (word.empty()) throw EmptyWord();
  switch (cls) {
    case CaseClass::AllCaps:
      return turkish_upper(word);
    case CaseClass::FirstCap: {
      std::u32string out = nfc(word);
      auto it = std::find_if(out.begin(), out.end(), is_cased);
      if (it != out.end()) *it = turkish_upper_char(*it);
      return out;
    }
    case CaseClass::Lower:
      return nfc(word);
  }
  return std::u32string(word);
}

std::string apply_case(std::string_view word, CaseClass cls) {
  if (word.empty()) throw EmptyWord();
  return encode_utf8(apply_case(decode_utf8(word), cls));
}

}  // namespace noktalama
