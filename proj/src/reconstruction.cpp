#include "noktalama/reconstruction.hpp"

#include "noktalama/error.hpp"
#include "noktalama/normalization.hpp"

namespace noktalama {

bool RenderPolicy::space_after(PunctLabel l) const {
  if (l == PunctLabel::Apostrophe && join_after_apostrophe) return false;
  return space_after_punct[index_of(l)];
}

namespace {

struct Piece {
  std::string text;  // lowercase
  CapTag cap = CapTag::Non;
  PunctLabel mark = PunctLabel::None;
};

std::string render(const std::vector<Piece>& pieces, const RenderPolicy& policy) {
  std::string out;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const Piece& p = pieces[i];
    if (i > 0) {
      const PunctLabel prev = pieces[i - 1].mark;
      if (prev == PunctLabel::None || policy.space_after(prev)) out.push_back(' ');
    }
    out += p.text.empty() ? p.text : apply_case(p.text, case_class_for(p.cap));
    if (const auto c = punct_char(p.mark)) out.push_back(*c);
  }
  return out;
}

}  // namespace

std::string reconstruct(std::span<const Token> tokens, std::span<const PunctLabel> punct,
                        std::span<const CapTag> caps, const RenderPolicy& policy,
                        ReconstructMode mode) {
  if (punct.size() != tokens.size()) {
    throw LengthMismatch(0, std::to_string(tokens.size()) + " tokens but " +
                                std::to_string(punct.size()) + " punct labels");
  }
  if (caps.size() != tokens.size()) {
    throw LengthMismatch(0, std::to_string(tokens.size()) + " tokens but " +
                                std::to_string(caps.size()) + " caps labels");
  }
  std::vector<Piece> pieces;
  // true when the next token continues the current piece
  bool piece_open = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Token& t = tokens[i];
    if (i == 0 && t.is_continuation && mode == ReconstructMode::Strict) {
      throw DanglingContinuation();
    }
    const bool next_continues = i + 1 < tokens.size() && tokens[i + 1].is_continuation;
    const std::string surface = strip_continuation(t, policy.continuation_prefix);
    if (t.is_continuation && piece_open) {
      pieces.back().text += surface;
    } else {
      pieces.push_back(Piece{surface, caps[i], PunctLabel::None});
    }
    piece_open = true;
    if (!next_continues) {
      pieces.back().mark = punct[i];
      piece_open = false;
    } else if (punct[i] == PunctLabel::Apostrophe) {
      pieces.back().mark = PunctLabel::Apostrophe;
      piece_open = false;  // the remainder becomes its own piece
    }
  }
  return render(pieces, policy);
}

std::string canonicalize(std::string_view text, const RenderPolicy& policy) {
  std::vector<Piece> pieces;
  for (WordUnit& u : pretokenize(text)) {
    pieces.push_back(Piece{std::move(u.text), cap_tag_for(u.original_case),
                           u.trailing_punct.value_or(PunctLabel::None)});
  }
  return render(pieces, policy);
}

}  // namespace noktalama
