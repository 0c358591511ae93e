#pragma once

// Turning tokens plus predicted labels back into readable text.

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "noktalama/labels.hpp"
#include "noktalama/tokenizer.hpp"

namespace noktalama {

struct RenderPolicy {
  /// Whether a space follows each mark (indexed by PunctLabel).
  std::array<bool, kPunctLabelCount> space_after_punct = {true, true, true, true, true,
                                                          true, true, false, true};
  /// An apostrophe is never followed by a space when set.
  bool join_after_apostrophe = true;
  std::string continuation_prefix = "##";

  bool space_after(PunctLabel l) const;
};

enum class ReconstructMode {
  Strict,   ///< a leading continuation token is an error
  Lenient,  ///< a leading continuation token starts a word
};

/// Merges continuation tokens into words, applies the case tag of each
/// word-initial token and appends the mark of each word-final token.
///
/// An apostrophe predicted inside a word splits it there ("türkiye" "##nin"
/// with apostrophe on the first piece gives "türkiye'nin"); the piece after
/// the apostrophe takes its case tag from its own first token. Other marks
/// on non-final pieces are ignored.
///
/// Throws LengthMismatch, or DanglingContinuation in strict mode.
std::string reconstruct(std::span<const Token> tokens, std::span<const PunctLabel> punct,
                        std::span<const CapTag> caps, const RenderPolicy& policy = {},
                        ReconstructMode mode = ReconstructMode::Strict);

/// Canonical comparison form: NFC, single spaces, marks attached to the
/// preceding word, each word coerced to its case class representative.
/// Characters outside the eight marks are kept as word characters.
std::string canonicalize(std::string_view text, const RenderPolicy& policy = {});

}  // namespace noktalama
