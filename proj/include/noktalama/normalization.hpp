#pragma once

// Turkish-aware casing and text canonicalization. All functions take and
// return UTF-8 and throw InvalidUtf8 on ill-formed input.

#include <string>
#include <string_view>

namespace noktalama {

enum class CaseClass { AllCaps, FirstCap, Lower };

std::string_view to_string(CaseClass c);

// UTF-8 <-> code points.
std::u32string decode_utf8(std::string_view text);
std::string encode_utf8(std::u32string_view text);
void append_utf8(std::string& out, char32_t c);
bool is_valid_utf8(std::string_view text);

/// NFC normalization.
std::string nfc(std::string_view text);
std::u32string nfc(std::u32string_view text);

bool is_whitespace(char32_t c);
bool is_upper_char(char32_t c);
bool is_lower_char(char32_t c);

/// Simple (1:1) case mappings with the Turkish dotted/dotless i rules:
/// İ->i, I->ı on the way down and i->İ, ı->I on the way up.
char32_t turkish_lower_char(char32_t c);
char32_t turkish_upper_char(char32_t c);

std::string turkish_lower(std::string_view text);
std::string turkish_upper(std::string_view text);
std::u32string turkish_lower(std::u32string_view text);
std::u32string turkish_upper(std::u32string_view text);

/// Classifies the casing of a word. Only cased letters take part; words
/// without any are Lower. Mixed-case words that fit no class ("McDonald",
/// "iPhone") are coerced to FirstCap. Throws EmptyWord on empty input.
CaseClass classify_case(std::string_view word);
CaseClass classify_case(std::u32string_view word);

/// Inverse of classify_case on a lowercase word. Throws EmptyWord.
std::string apply_case(std::string_view word, CaseClass cls);
std::u32string apply_case(std::u32string_view word, CaseClass cls);

}  // namespace noktalama
