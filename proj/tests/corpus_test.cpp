#include "noktalama/corpus.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "noktalama/error.hpp"
#include "support/oracles.hpp"
#include "support/test_corpus.hpp"

namespace noktalama {
namespace {

using P = PunctLabel;
using C = CapTag;

std::vector<std::string> surfaces(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) out.push_back(t.surface);
  return out;
}

TEST(Ingest, JsonlKeepsColumn) {
  std::istringstream in(
      "{\"content\": \"Birinci haber.\", \"title\": \"x\"}\n"
      "\n"
      "{\"title\": \"y\", \"content\": \"İkinci.\"}\n");
  const auto docs = ingest(in, CorpusFormat::Jsonl);
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[0].id, "0");
  EXPECT_EQ(docs[0].text, "Birinci haber.");
  EXPECT_EQ(docs[1].id, "1");
}

TEST(Ingest, JsonlMissingColumn) {
  std::istringstream in("{\"content\": \"a\"}\n{\"body\": \"b\"}\n");
  try {
    ingest(in, CorpusFormat::Jsonl);
    FAIL();
  } catch (const MissingColumn& e) {
    EXPECT_EQ(e.column(), "content");
  }
}

TEST(Ingest, JsonlNullIsMalformed) {
  std::istringstream in("{\"content\": null}\n");
  EXPECT_THROW(ingest(in, CorpusFormat::Jsonl), MalformedRecord);
  std::istringstream bad("{\"content\": \"a\"\n");
  EXPECT_THROW(ingest(bad, CorpusFormat::Jsonl), MalformedRecord);
}

TEST(Ingest, CsvWithQuotedNewlines) {
  std::istringstream in(
      "\xEF\xBB\xBFtitle,content\n"
      "a,\"Birinci, haber.\nDevamı.\"\n"
      "b,\"Tırnak \"\"içinde\"\".\"\n");
  const auto docs = ingest(in, CorpusFormat::Csv);
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[0].text, "Birinci, haber.\nDevamı.");
  EXPECT_EQ(docs[1].text, "Tırnak \"içinde\".");
}

TEST(Ingest, CsvMissingColumnAndBadRow) {
  std::istringstream missing("title,body\na,b\n");
  EXPECT_THROW(ingest(missing, CorpusFormat::Csv), MissingColumn);
  std::istringstream ragged("title,content\na,b,c\n");
  EXPECT_THROW(ingest(ragged, CorpusFormat::Csv), MalformedRecord);
}

TEST(Ingest, MissingFile) {
  EXPECT_THROW(ingest("/nonexistent.jsonl", CorpusFormat::Jsonl), IoError);
}

TEST(ExtractLabels, FirstSample) {
  const Vocab v = testing::sample_vocab();
  const auto doc = extract_labels(pretokenize("Türkiye'nin her tarafında devam etmektedir."), v);
  EXPECT_EQ(surfaces(doc.tokens), (std::vector<std::string>{"türkiye", "nin", "her", "tarafında",
                                                            "devam", "etmektedir"}));
  EXPECT_EQ(doc.punct, (std::vector<P>{P::Apostrophe, P::None, P::None, P::None, P::None,
                                       P::Period}));
  EXPECT_EQ(doc.caps, (std::vector<C>{C::One, C::Non, C::Non, C::Non, C::Non, C::Non}));
}

TEST(ExtractLabels, SecondSample) {
  const Vocab v = testing::sample_vocab();
  const auto doc = extract_labels(pretokenize("YTU Türkiye'nin en iyi okuludur."), v);
  EXPECT_EQ(surfaces(doc.tokens), (std::vector<std::string>{"y", "##tu", "türkiye", "nin", "en",
                                                            "iyi", "okulu", "##dur"}));
  EXPECT_EQ(doc.punct, (std::vector<P>{P::None, P::None, P::Apostrophe, P::None, P::None, P::None,
                                       P::None, P::Period}));
  EXPECT_EQ(doc.caps,
            (std::vector<C>{C::Cap, C::Non, C::One, C::Non, C::Non, C::Non, C::Non, C::Non}));
}

TEST(ExtractLabels, Empty) {
  const auto doc = extract_labels({}, testing::sample_vocab());
  EXPECT_TRUE(doc.tokens.empty());
  EXPECT_TRUE(doc.punct.empty());
  EXPECT_TRUE(doc.caps.empty());
}

TEST(ExtractLabels, AlignedLengths) {
  const Vocab v = testing::corpus_vocab();
  testing::CorpusGenerator gen(11);
  for (int i = 0; i < 200; ++i) {
    const auto doc = label_document({"d", gen.noisy_paragraph()}, v);
    ASSERT_EQ(doc.tokens.size(), doc.punct.size());
    ASSERT_EQ(doc.tokens.size(), doc.caps.size());
    for (std::size_t t = 0; t < doc.tokens.size(); ++t) {
      const bool last = t + 1 == doc.tokens.size() ||
                        doc.tokens[t + 1].word_index != doc.tokens[t].word_index;
      if (!last) EXPECT_EQ(doc.punct[t], P::None);
      if (doc.tokens[t].is_continuation) EXPECT_EQ(doc.caps[t], C::Non);
    }
  }
}

std::vector<P> labels_with_finals(std::size_t n, std::initializer_list<std::size_t> finals) {
  std::vector<P> out(n, P::None);
  for (auto f : finals) out[f] = P::Period;
  return out;
}

TEST(Segment, BoundaryRestarts) {
  const auto punct = labels_with_finals(10, {2, 6});
  EXPECT_EQ(segment_bounds(punct, 4),
            (std::vector<TokenRange>{{0, 4}, {3, 7}, {7, 10}}));
}

TEST(Segment, HardCutWithoutBoundary) {
  EXPECT_EQ(segment_bounds(std::vector<P>(10, P::None), 4),
            (std::vector<TokenRange>{{0, 4}, {4, 8}, {8, 10}}));
}

TEST(Segment, CommaIsNotABoundary) {
  std::vector<P> punct(6, P::None);
  punct[1] = P::Comma;
  punct[2] = P::Colon;
  EXPECT_EQ(segment_bounds(punct, 4), (std::vector<TokenRange>{{0, 4}, {4, 6}}));
  punct[1] = P::Question;
  EXPECT_EQ(segment_bounds(punct, 4), (std::vector<TokenRange>{{0, 4}, {2, 6}}));
}

TEST(Segment, EdgeCases) {
  EXPECT_TRUE(segment_bounds({}, 4).empty());
  EXPECT_EQ(segment_bounds(std::vector<P>(3, P::None), 4), (std::vector<TokenRange>{{0, 3}}));
  EXPECT_THROW(segment_bounds(std::vector<P>(3, P::None), 1), InvalidArgument);
}

TEST(Segment, MatchesBruteForce) {
  std::mt19937_64 rng(2024);
  const P finals[] = {P::Period, P::Exclamation, P::Semicolon, P::Question};
  const P others[] = {P::None, P::Comma, P::Colon, P::Hyphen, P::Apostrophe};
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t max_len = std::uniform_int_distribution<std::size_t>(4, 64)(rng);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 400)(rng);
    const double density = std::uniform_real_distribution<double>(0, 0.4)(rng);
    std::vector<P> punct(n);
    std::vector<bool> is_final(n);
    for (std::size_t i = 0; i < n; ++i) {
      is_final[i] = std::bernoulli_distribution(density)(rng);
      punct[i] = is_final[i] ? finals[rng() % 4] : others[rng() % 5];
    }
    const auto got = segment_bounds(punct, max_len);
    const auto want = testing::brute_force_segments(is_final, max_len);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].begin, want[i].first);
      EXPECT_EQ(got[i].end, want[i].second);
      EXPECT_LE(got[i].size(), max_len);
    }
  }
}

TEST(Segment, SegmentsCarryLabelsAndSpans) {
  const Vocab v = testing::corpus_vocab();
  const auto doc = label_document({"7", "Bir iki. Üç dört beş. Altı."}, v);
  const auto segs = segment(doc, 4);
  ASSERT_FALSE(segs.empty());
  for (const auto& s : segs) {
    EXPECT_EQ(s.doc_id, "7");
    EXPECT_EQ(s.tokens.size(), s.punct.size());
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      EXPECT_EQ(s.tokens[i], doc.tokens[s.first_token + i]);
      EXPECT_EQ(s.punct[i], doc.punct[s.first_token + i]);
    }
  }
  EXPECT_EQ(segs[0].source_span.start, 0u);
}

TEST(Rational, Parse) {
  auto r = Rational::parse("0.7");
  EXPECT_EQ(r.floor_times(10), 7u);
  EXPECT_EQ(Rational::parse("7/10").floor_times(10), 7u);
  EXPECT_EQ(Rational::parse("1").floor_times(3), 3u);
  EXPECT_EQ(Rational::parse("0.35").floor_times(3), 1u);
  EXPECT_THROW(Rational::parse("abc"), InvalidArgument);
  EXPECT_THROW(Rational::parse("1/0"), InvalidArgument);
}

std::vector<Document> numbered_docs(std::size_t n) {
  std::vector<Document> docs;
  for (std::size_t i = 0; i < n; ++i) docs.push_back({std::to_string(i), "t" + std::to_string(i)});
  return docs;
}

TEST(Split, DefaultProportions) {
  const auto s = split_dataset(numbered_docs(10), SplitSpec{});
  EXPECT_EQ(s.train.size(), 7u);
  EXPECT_EQ(s.test.size(), 2u);
  EXPECT_EQ(s.valid.size(), 1u);
  std::set<std::string> ids;
  for (const auto* part : {&s.train, &s.test, &s.valid}) {
    for (const auto& d : *part) ids.insert(d.id);
  }
  EXPECT_EQ(ids.size(), 10u);
}

TEST(Split, SizesFollowFloorRule) {
  for (std::size_t n = 0; n < 60; ++n) {
    const auto s = split_dataset(numbered_docs(n), SplitSpec{});
    EXPECT_EQ(s.train.size(), n * 7 / 10);
    EXPECT_EQ(s.train.size() + s.test.size(), n * 9 / 10);
    EXPECT_EQ(s.train.size() + s.test.size() + s.valid.size(), n);
  }
}

TEST(Split, DeterministicPerSeed) {
  const auto a = shuffled_indices(100, 42);
  EXPECT_EQ(a, shuffled_indices(100, 42));
  EXPECT_NE(a, shuffled_indices(100, 43));
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) EXPECT_EQ(sorted[i], i);
}

TEST(Split, RejectsBadFractions) {
  SplitSpec spec;
  spec.train = Rational::parse("0.8");
  EXPECT_THROW(spec.validate(), InvalidArgument);
  EXPECT_THROW(split_dataset(numbered_docs(3), spec), InvalidArgument);
}

TEST(Distribution, SmallExample) {
  const Vocab v = testing::corpus_vocab();
  const auto segs = segment(label_document({"0", "a. b, c."}, v), 510);
  const auto table = distribution({{"train", segs}});
  EXPECT_EQ(table.count("train", P::Period), 2u);
  EXPECT_EQ(table.count("train", P::Comma), 1u);
  EXPECT_EQ(table.count("train", P::Question), 0u);
}

TEST(Distribution, EmptySplit) {
  const auto table = distribution({{"train", {}}, {"test", {}}});
  for (std::size_t k = 0; k + 1 < kPunctLabelCount; ++k) {
    EXPECT_EQ(table.count("test", static_cast<P>(k)), 0u);
  }
  std::ostringstream out;
  table.print(out);
  EXPECT_NE(out.str().find("Split"), std::string::npos);
}

TEST(Distribution, OverlapCountedOnce) {
  const Vocab v = testing::corpus_vocab();
  const auto doc = label_document({"0", "bir, iki, üç, dört, beş."}, v);
  auto segs = segment(doc, 3);
  auto twice = segs;
  twice.insert(twice.end(), segs.begin(), segs.end());
  const auto table = distribution({{"train", twice}});
  EXPECT_EQ(table.count("train", P::Comma), 4u);
  EXPECT_EQ(table.count("train", P::Period), 1u);
}

TEST(Distribution, MatchesNaiveScan) {
  const Vocab v = testing::corpus_vocab();
  testing::CorpusGenerator gen(99);
  for (int i = 0; i < 200; ++i) {
    const std::string text = gen.noisy_paragraph();
    const auto segs = segment(label_document({"0", text}, v), 16);
    const auto table = distribution({{"all", segs}});
    const auto naive = testing::naive_mark_scan(text);
    for (std::size_t k = 0; k + 1 < kPunctLabelCount; ++k) {
      const P label = static_cast<P>(k);
      EXPECT_EQ(table.count("all", label), naive.at(*punct_char(label))) << text;
    }
  }
}

TEST(Inference, WindowCounts) {
  EXPECT_EQ(inference_windows(600, 510).size(), 2u);
  EXPECT_EQ(inference_windows(10, 510).size(), 1u);
  EXPECT_TRUE(inference_windows(0, 510).empty());
  for (std::size_t n = 0; n < 300; ++n) {
    for (std::size_t L : {4u, 5u, 16u, 64u}) {
      const auto w = inference_windows(n, L);
      ASSERT_EQ(w.size(), testing::expected_window_count(n, L)) << n << " " << L;
      if (n == 0) continue;
      EXPECT_EQ(w.front().begin, 0u);
      EXPECT_EQ(w.back().end, n);
      for (std::size_t i = 0; i < w.size(); ++i) {
        EXPECT_LE(w[i].size(), L);
        if (i > 0) EXPECT_LE(w[i].begin, w[i - 1].end);
      }
    }
  }
}

TEST(Inference, StripPunctuation) {
  EXPECT_EQ(strip_punctuation("Türkiye'nin her yeri, güzel."), "Türkiyenin her yeri  güzel ");
}

TEST(Inference, PlanHasNoLabels) {
  const Vocab v = testing::sample_vocab();
  const auto plan = prepare_inference("Türkiye'nin her tarafında devam etmektedir.", v, 510);
  EXPECT_EQ(plan.windows.size(), 1u);
  for (P p : plan.document.punct) EXPECT_EQ(p, P::None);
  for (C c : plan.document.caps) EXPECT_EQ(c, C::Non);
  for (const auto& u : plan.document.units) EXPECT_FALSE(u.trailing_punct);
}

TEST(Inference, LongParagraphTwoWindows) {
  const Vocab v({"[UNK]", "ev"});
  std::string text;
  for (int i = 0; i < 600; ++i) text += "ev ";
  const auto plan = prepare_inference(text, v, 510);
  EXPECT_EQ(plan.document.tokens.size(), 600u);
  EXPECT_EQ(plan.windows.size(), 2u);
}

TEST(Inference, MergePrefersCentre) {
  const Vocab v({"[UNK]", "ev"});
  std::string text;
  for (int i = 0; i < 12; ++i) text += "ev ";
  const auto plan = prepare_inference(text, v, 8);
  ASSERT_EQ(plan.windows.size(), 2u);  // [0,8) and [4,12)
  std::vector<Prediction> preds;
  for (std::size_t w = 0; w < plan.windows.size(); ++w) {
    const auto n = plan.windows[w].size();
    preds.push_back({std::vector<P>(n, w == 0 ? P::Comma : P::Period),
                     std::vector<C>(n, w == 0 ? C::One : C::Cap)});
  }
  const auto merged = merge_window_predictions(plan, preds);
  ASSERT_EQ(merged.punct.size(), 12u);
  // Position 5: distance 2 from the end of window 0, 1 from the start of window 1.
  EXPECT_EQ(merged.punct[5], P::Comma);
  // Position 6: distance 1 in window 0, 2 in window 1.
  EXPECT_EQ(merged.punct[6], P::Period);
  EXPECT_EQ(merged.punct[0], P::Comma);
  EXPECT_EQ(merged.punct[11], P::Period);
  preds.pop_back();
  EXPECT_THROW(merge_window_predictions(plan, preds), LengthMismatch);
}

TEST(Jsonl, ExactLine) {
  const Vocab v = testing::sample_vocab();
  const auto segs = segment(label_document({"0", "Türkiye'nin her tarafında devam etmektedir."}, v));
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segment_to_json(segs[0]),
            "{\"doc_id\":\"0\",\"tokens\":[\"türkiye\",\"nin\",\"her\",\"tarafında\",\"devam\","
            "\"etmektedir\"],\"punct\":[\"apostrophe\",\"non\",\"non\",\"non\",\"non\","
            "\"period\"],\"caps\":[\"One\",\"non\",\"non\",\"non\",\"non\",\"non\"]}");
}

TEST(Jsonl, RoundTrip) {
  const Vocab v = testing::corpus_vocab();
  testing::CorpusGenerator gen(5);
  std::vector<LabeledSegment> segs;
  for (int d = 0; d < 20; ++d) {
    auto s = segment(label_document({std::to_string(d), gen.paragraph()}, v), 12);
    segs.insert(segs.end(), s.begin(), s.end());
  }
  std::stringstream buf;
  write_segments_jsonl(buf, segs);
  const auto back = read_segments_jsonl(buf, v);
  ASSERT_EQ(back.size(), segs.size());
  for (std::size_t i = 0; i < segs.size(); ++i) {
    EXPECT_EQ(back[i].doc_id, segs[i].doc_id);
    EXPECT_EQ(back[i].punct, segs[i].punct);
    EXPECT_EQ(back[i].caps, segs[i].caps);
    ASSERT_EQ(back[i].tokens.size(), segs[i].tokens.size());
    for (std::size_t t = 0; t < segs[i].tokens.size(); ++t) {
      EXPECT_EQ(back[i].tokens[t].surface, segs[i].tokens[t].surface);
      EXPECT_EQ(back[i].tokens[t].vocab_id, segs[i].tokens[t].vocab_id);
      EXPECT_EQ(back[i].tokens[t].is_continuation, segs[i].tokens[t].is_continuation);
    }
  }
  std::stringstream again;
  write_segments_jsonl(again, back);
  EXPECT_EQ(again.str(), buf.str());
}

TEST(Jsonl, MalformedLine) {
  const Vocab v = testing::sample_vocab();
  std::istringstream in("{\"doc_id\":\"0\",\"tokens\":[\"her\"],\"punct\":[],\"caps\":[\"non\"]}\n");
  EXPECT_THROW(read_segments_jsonl(in, v), MalformedRecord);
}

}  // namespace
}  // namespace noktalama
