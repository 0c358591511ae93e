#include "noktalama/reconstruction.hpp"

#include <gtest/gtest.h>

#include "noktalama/corpus.hpp"
#include "noktalama/error.hpp"
#include "support/test_corpus.hpp"

namespace noktalama {
namespace {

using P = PunctLabel;
using C = CapTag;

std::string rebuild(std::string_view text, const Vocab& v) {
  const auto doc = label_document({"0", std::string(text)}, v);
  return reconstruct(doc.tokens, doc.punct, doc.caps);
}

TEST(Reconstruct, SampleSentences) {
  const Vocab v = testing::sample_vocab();
  EXPECT_EQ(rebuild("Türkiye'nin her tarafında devam etmektedir.", v),
            "Türkiye'nin her tarafında devam etmektedir.");
  EXPECT_EQ(rebuild("YTU Türkiye'nin en iyi okuludur.", v), "YTU Türkiye'nin en iyi okuludur.");
}

TEST(Reconstruct, FromExplicitLabels) {
  const Vocab v = testing::sample_vocab();
  const std::vector<Token> toks = {{"y", false, *v.find("y"), 0},
                                   {"##tu", true, *v.find("##tu"), 0},
                                   {"okulu", false, *v.find("okulu"), 1},
                                   {"##dur", true, *v.find("##dur"), 1}};
  const std::vector<P> punct = {P::None, P::Comma, P::None, P::Exclamation};
  const std::vector<C> caps = {C::Cap, C::Non, C::One, C::Non};
  EXPECT_EQ(reconstruct(toks, punct, caps), "YTU, Okuludur!");
}

TEST(Reconstruct, Empty) {
  EXPECT_EQ(reconstruct({}, {}, {}), "");
}

TEST(Reconstruct, LengthMismatch) {
  const std::vector<Token> toks = {{"ev", false, 0, 0}};
  EXPECT_THROW(reconstruct(toks, std::vector<P>{}, std::vector<C>{C::Non}), LengthMismatch);
  EXPECT_THROW(reconstruct(toks, std::vector<P>{P::None}, std::vector<C>{}), LengthMismatch);
}

TEST(Reconstruct, DanglingContinuation) {
  const std::vector<Token> toks = {{"##dur", true, 0, 0}, {"ev", false, 0, 1}};
  const std::vector<P> punct = {P::None, P::Period};
  const std::vector<C> caps = {C::Non, C::Non};
  EXPECT_THROW(reconstruct(toks, punct, caps, {}, ReconstructMode::Strict),
               DanglingContinuation);
  EXPECT_EQ(reconstruct(toks, punct, caps, {}, ReconstructMode::Lenient), "dur ev.");
}

TEST(Reconstruct, MarkInsideWordIgnoredExceptApostrophe) {
  const std::vector<Token> toks = {{"okulu", false, 0, 0}, {"##dur", true, 0, 0}};
  EXPECT_EQ(reconstruct(toks, std::vector<P>{P::Comma, P::None}, std::vector<C>{C::Non, C::Non}),
            "okuludur");
  EXPECT_EQ(reconstruct(toks, std::vector<P>{P::Apostrophe, P::Period},
                        std::vector<C>{C::One, C::Non}),
            "Okulu'dur.");
}

TEST(Reconstruct, PolicyControlsSpacing) {
  const std::vector<Token> toks = {{"a", false, 0, 0}, {"b", false, 0, 1}, {"c", false, 0, 2}};
  const std::vector<P> punct = {P::Hyphen, P::Apostrophe, P::None};
  const std::vector<C> caps(3, C::Non);
  EXPECT_EQ(reconstruct(toks, punct, caps), "a- b'c");
  RenderPolicy tight;
  tight.space_after_punct[index_of(P::Hyphen)] = false;
  EXPECT_EQ(reconstruct(toks, punct, caps, tight), "a-b'c");
  RenderPolicy loose;
  loose.join_after_apostrophe = false;
  loose.space_after_punct[index_of(P::Apostrophe)] = true;
  EXPECT_EQ(reconstruct(toks, punct, caps, loose), "a- b' c");
}

TEST(Canonicalize, Examples) {
  EXPECT_EQ(canonicalize("deneme  , yapıldı"), "deneme, yapıldı");
  EXPECT_EQ(canonicalize("  Türkiye'nin   her\ttarafında. "), "Türkiye'nin her tarafında.");
  EXPECT_EQ(canonicalize("McDonald"), "Mcdonald");
  EXPECT_EQ(canonicalize(""), "");
}

TEST(Canonicalize, Idempotent) {
  testing::CorpusGenerator gen(17);
  for (int i = 0; i < 300; ++i) {
    const std::string once = canonicalize(gen.noisy_paragraph());
    EXPECT_EQ(canonicalize(once), once);
  }
}

TEST(RoundTrip, GoldLabelsRecoverCanonicalText) {
  const Vocab v = testing::corpus_vocab();
  testing::CorpusGenerator gen(1234);
  for (int i = 0; i < 1000; ++i) {
    const std::string text = i % 2 ? gen.noisy_paragraph() : gen.paragraph();
    ASSERT_EQ(rebuild(text, v), canonicalize(text)) << text;
  }
}

TEST(RoundTrip, AcrossSegments) {
  const Vocab v = testing::corpus_vocab();
  testing::CorpusGenerator gen(77);
  for (int i = 0; i < 100; ++i) {
    const std::string text = gen.paragraph(3, 8);
    const auto doc = label_document({"0", text}, v);
    std::vector<Token> toks;
    std::vector<P> punct;
    std::vector<C> caps;
    std::size_t next = 0;
    for (const auto& s : segment(doc, 16)) {
      for (std::size_t t = next - s.first_token; t < s.tokens.size(); ++t) {
        toks.push_back(s.tokens[t]);
        punct.push_back(s.punct[t]);
        caps.push_back(s.caps[t]);
      }
      next = s.first_token + s.tokens.size();
    }
    EXPECT_EQ(reconstruct(toks, punct, caps), canonicalize(text));
  }
}

}  // namespace
}  // namespace noktalama
