#include "noktalama/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "noktalama/error.hpp"

namespace noktalama {

__extension__ using u128 = unsigned __int128;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Ingestion

namespace {

/// RFC 4180 record reader. Quoted fields may span lines.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  /// Returns false at end of input. `line` receives the 1-based line the
  /// record starts on.
  bool next(std::vector<std::string>& fields, std::size_t& line) {
    fields.clear();
    int c = in_.peek();
    if (c == EOF) return false;
    line = line_;
    std::string field;
    bool quoted = false;
    bool after_quote = false;
    bool any = false;
    while (true) {
      c = in_.get();
      if (c == EOF) {
        if (quoted) throw MalformedRecord(line, "unterminated quoted field");
        break;
      }
      any = true;
      const char ch = static_cast<char>(c);
      if (quoted) {
        if (ch == '"') {
          if (in_.peek() == '"') {
            in_.get();
            field.push_back('"');
          } else {
            quoted = false;
            after_quote = true;
          }
        } else {
          if (ch == '\n') ++line_;
          field.push_back(ch);
        }
        continue;
      }
      if (ch == ',') {
        fields.push_back(std::move(field));
        field.clear();
        after_quote = false;
      } else if (ch == '\n') {
        ++line_;
        break;
      } else if (ch == '\r' && in_.peek() == '\n') {
        continue;
      } else if (ch == '"' && field.empty() && !after_quote) {
        quoted = true;
      } else if (after_quote) {
        throw MalformedRecord(line, "character after closing quote");
      } else {
        field.push_back(ch);
      }
    }
    if (!any) return false;
    fields.push_back(std::move(field));
    return true;
  }

 private:
  std::istream& in_;
  std::size_t line_ = 1;
};

void check_utf8(const std::string& text, std::size_t line) {
  if (!is_valid_utf8(text)) throw MalformedRecord(line, "invalid UTF-8");
}

void ingest_csv(std::istream& in, const std::string& column,
                const std::function<void(Document)>& sink) {
  CsvReader reader(in);
  std::vector<std::string> header;
  std::size_t line = 0;
  if (!reader.next(header, line)) throw MissingColumn(column);
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);
  const auto it = std::find(header.begin(), header.end(), column);
  if (it == header.end()) throw MissingColumn(column);
  const auto col = static_cast<std::size_t>(it - header.begin());
  std::vector<std::string> fields;
  std::size_t index = 0;
  while (reader.next(fields, line)) {
    if (fields.size() == 1 && fields[0].empty() && header.size() > 1) continue;
    if (fields.size() != header.size()) {
      throw MalformedRecord(line, "expected " + std::to_string(header.size()) +
                                      " fields, found " + std::to_string(fields.size()));
    }
    check_utf8(fields[col], line);
    sink(Document{std::to_string(index++), std::move(fields[col])});
  }
}

void ingest_jsonl(std::istream& in, const std::string& column,
                  const std::function<void(Document)>& sink) {
  std::string text;
  std::size_t line = 0;
  std::size_t index = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(text);
    } catch (const json::exception& e) {
      throw MalformedRecord(line, e.what());
    }
    if (!record.is_object()) throw MalformedRecord(line, "record is not an object");
    const auto field = record.find(column);
    if (field == record.end()) throw MissingColumn(column);
    if (!field->is_string()) {
      throw MalformedRecord(line, "column '" + column + "' is " +
                                      std::string(field->type_name()) + ", expected string");
    }
    sink(Document{std::to_string(index++), field->get<std::string>()});
  }
  if (in.bad()) throw IoError("read error");
}

}  // namespace

void for_each_document(std::istream& in, CorpusFormat format, const std::string& column,
                       const std::function<void(Document)>& sink) {
  if (format == CorpusFormat::Csv) {
    ingest_csv(in, column, sink);
  } else {
    ingest_jsonl(in, column, sink);
  }
}

std::vector<Document> ingest(std::istream& in, CorpusFormat format, const std::string& column) {
  std::vector<Document> docs;
  for_each_document(in, format, column, [&](Document d) { docs.push_back(std::move(d)); });
  return docs;
}

std::vector<Document> ingest(const std::filesystem::path& path, CorpusFormat format,
                             const std::string& column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return ingest(in, format, column);
}

// ---------------------------------------------------------------------------
// Labels and windows

LabeledDocument extract_labels(std::vector<WordUnit> units, const Vocab& vocab) {
  LabeledDocument doc;
  for (std::size_t w = 0; w < units.size(); ++w) {
    const WordUnit& unit = units[w];
    std::vector<Token> pieces = wordpiece(unit.text, vocab, w);
    for (std::size_t k = 0; k < pieces.size(); ++k) {
      const bool last = k + 1 == pieces.size();
      doc.punct.push_back(last && unit.trailing_punct ? *unit.trailing_punct : PunctLabel::None);
      doc.caps.push_back(k == 0 ? cap_tag_for(unit.original_case) : CapTag::Non);
      doc.tokens.push_back(std::move(pieces[k]));
    }
  }
  doc.units = std::move(units);
  return doc;
}

LabeledDocument label_document(const Document& doc, const Vocab& vocab) {
  LabeledDocument out = extract_labels(pretokenize(doc.text), vocab);
  out.doc_id = doc.id;
  return out;
}

std::vector<TokenRange> segment_bounds(const std::vector<PunctLabel>& punct,
                                       std::size_t max_len) {
  if (max_len < 2) throw InvalidArgument("max_len must be at least 2");
  std::vector<TokenRange> out;
  const std::size_t n = punct.size();
  std::size_t begin = 0;
  while (begin < n) {
    const std::size_t end = std::min(n, begin + max_len);
    out.push_back({begin, end});
    if (end == n) break;
    std::size_t next = end;  // hard cut when no boundary mark is inside
    for (std::size_t p = end; p > begin; --p) {
      if (is_segment_boundary(punct[p - 1])) {
        next = p;
        break;
      }
    }
    begin = next;
  }
  return out;
}

LabeledSegment make_segment(const LabeledDocument& doc, TokenRange range) {
  LabeledSegment seg;
  seg.doc_id = doc.doc_id;
  seg.first_token = range.begin;
  const auto b = static_cast<std::ptrdiff_t>(range.begin);
  const auto e = static_cast<std::ptrdiff_t>(range.end);
  seg.tokens.assign(doc.tokens.begin() + b, doc.tokens.begin() + e);
  seg.punct.assign(doc.punct.begin() + b, doc.punct.begin() + e);
  seg.caps.assign(doc.caps.begin() + b, doc.caps.begin() + e);
  if (range.size() > 0 && !doc.units.empty()) {
    seg.source_span = {doc.units[doc.tokens[range.begin].word_index].char_span.start,
                       doc.units[doc.tokens[range.end - 1].word_index].char_span.end};
  }
  return seg;
}

std::vector<LabeledSegment> segment(const LabeledDocument& doc, std::size_t max_len) {
  std::vector<LabeledSegment> out;
  for (const TokenRange& r : segment_bounds(doc.punct, max_len)) {
    out.push_back(make_segment(doc, r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splits

Rational Rational::parse(std::string_view text) {
  auto bad = [&] { return InvalidArgument("not a fraction: '" + std::string(text) + "'"); };
  auto parse_uint = [&](std::string_view s) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) throw bad();
    return v;
  };
  Rational r;
  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    r.num = parse_uint(text.substr(0, slash));
    r.den = parse_uint(text.substr(slash + 1));
    if (r.den == 0) throw bad();
  } else if (const auto dot = text.find('.'); dot != std::string_view::npos) {
    const std::string_view whole = text.substr(0, dot);
    const std::string_view frac = text.substr(dot + 1);
    if (frac.empty() || frac.size() > 18) throw bad();
    r.den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) r.den *= 10;
    r.num = (whole.empty() ? 0 : parse_uint(whole)) * r.den + parse_uint(frac);
  } else {
    r.num = parse_uint(text);
    r.den = 1;
  }
  return r;
}

std::string Rational::to_string() const {
  return std::to_string(num) + "/" + std::to_string(den);
}

std::size_t Rational::floor_times(std::size_t n) const {
  const u128 product = static_cast<u128>(num) * n;
  return static_cast<std::size_t>(product / den);
}

void SplitSpec::validate() const {
  for (const Rational* r : {&train, &test, &valid}) {
    if (r->den == 0 || r->num > r->den) {
      throw InvalidArgument("split fraction " + r->to_string() + " outside [0,1]");
    }
  }
  // a/b + c/d + e/f == 1  <=>  a*d*f + c*b*f + e*b*d == b*d*f
  const u128 lhs = u128(train.num) * test.den * valid.den +
                   u128(test.num) * train.den * valid.den +
                   u128(valid.num) * train.den * test.den;
  const u128 rhs = u128(train.den) * test.den * valid.den;
  if (lhs != rhs) throw InvalidArgument("split fractions do not sum to 1");
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

Xorshift64Star::Xorshift64Star(std::uint64_t seed) {
  state_ = splitmix64(seed);
  if (state_ == 0) state_ = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t Xorshift64Star::next() {
  state_ ^= state_ >> 12;
  state_ ^= state_ << 25;
  state_ ^= state_ >> 27;
  return state_ * 0x2545F4914F6CDD1DULL;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Xorshift64Star rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

Splits<Document> split_dataset(std::vector<Document> docs, const SplitSpec& spec) {
  spec.validate();
  const std::size_t n = docs.size();
  const std::vector<std::size_t> order = shuffled_indices(n, spec.seed);
  const std::size_t cut_train = spec.train.floor_times(n);
  const Rational train_test{spec.train.num * spec.test.den + spec.test.num * spec.train.den,
                            spec.train.den * spec.test.den};
  const std::size_t cut_test = std::max(cut_train, train_test.floor_times(n));
  Splits<Document> out;
  for (std::size_t k = 0; k < n; ++k) {
    Document& d = docs[order[k]];
    if (k < cut_train) {
      out.train.push_back(std::move(d));
    } else if (k < cut_test) {
      out.test.push_back(std::move(d));
    } else {
      out.valid.push_back(std::move(d));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Distribution

std::uint64_t DistributionTable::count(std::string_view split, PunctLabel label) const {
  if (label == PunctLabel::None) return 0;
  for (std::size_t s = 0; s < split_names.size(); ++s) {
    if (split_names[s] == split) return counts[s][index_of(label)];
  }
  return 0;
}

void DistributionTable::print(std::ostream& out) const {
  constexpr int kMarkWidth = 5;
  std::vector<std::size_t> widths;
  for (std::size_t s = 0; s < split_names.size(); ++s) {
    std::size_t w = split_names[s].size();
    for (auto c : counts[s]) w = std::max(w, std::to_string(c).size());
    widths.push_back(w);
  }
  out << std::left << std::setw(kMarkWidth) << "Split";
  for (std::size_t s = 0; s < split_names.size(); ++s) {
    out << " | " << std::right << std::setw(static_cast<int>(widths[s])) << split_names[s];
  }
  out << '\n';
  for (std::size_t m = 0; m < kPunctMarks.size(); ++m) {
    out << std::left << std::setw(kMarkWidth) << kPunctMarks[m];
    for (std::size_t s = 0; s < split_names.size(); ++s) {
      out << " | " << std::right << std::setw(static_cast<int>(widths[s])) << counts[s][m];
    }
    out << '\n';
  }
}

std::string DistributionTable::to_json() const {
  ordered_json root = ordered_json::object();
  for (std::size_t s = 0; s < split_names.size(); ++s) {
    ordered_json row = ordered_json::object();
    for (std::size_t m = 0; m < kPunctMarks.size(); ++m) {
      row[std::string(1, kPunctMarks[m])] = counts[s][m];
    }
    root[split_names[s]] = std::move(row);
  }
  return root.dump();
}

DistributionTable distribution(
    const std::vector<std::pair<std::string, std::vector<LabeledSegment>>>& splits) {
  DistributionTable table;
  for (const auto& [name, segments] : splits) {
    std::array<std::uint64_t, kPunctLabelCount - 1> row{};
    std::set<std::pair<std::string_view, std::size_t>> seen;
    for (const LabeledSegment& seg : segments) {
      for (std::size_t i = 0; i < seg.punct.size(); ++i) {
        if (seg.punct[i] == PunctLabel::None) continue;
        if (!seen.emplace(seg.doc_id, seg.first_token + i).second) continue;
        ++row[index_of(seg.punct[i])];
      }
    }
    table.split_names.push_back(name);
    table.counts.push_back(row);
  }
  return table;
}

// ---------------------------------------------------------------------------
// Inference windows

std::string strip_punctuation(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (c == '\'') continue;
    out.push_back(is_punct_mark(static_cast<unsigned char>(c)) ? ' ' : c);
  }
  return out;
}

std::vector<TokenRange> inference_windows(std::size_t n_tokens, std::size_t max_len) {
  if (max_len < 2) throw InvalidArgument("max_len must be at least 2");
  std::vector<TokenRange> out;
  if (n_tokens == 0) return out;
  const std::size_t stride = max_len / 2;
  std::size_t begin = 0;
  while (true) {
    const std::size_t end = std::min(n_tokens, begin + max_len);
    out.push_back({begin, end});
    if (end == n_tokens) break;
    begin += stride;
  }
  return out;
}

InferencePlan prepare_inference(std::string_view text, const Vocab& vocab, std::size_t max_len) {
  InferencePlan plan;
  plan.document = extract_labels(pretokenize(turkish_lower(strip_punctuation(text))), vocab);
  plan.windows = inference_windows(plan.document.tokens.size(), max_len);
  return plan;
}

Prediction merge_window_predictions(const InferencePlan& plan,
                                    const std::vector<Prediction>& window_predictions) {
  if (window_predictions.size() != plan.windows.size()) {
    throw LengthMismatch(window_predictions.size(), "expected one prediction per window");
  }
  const std::size_t n = plan.document.tokens.size();
  Prediction merged;
  merged.punct.assign(n, PunctLabel::None);
  merged.caps.assign(n, CapTag::Non);
  std::vector<std::ptrdiff_t> best(n, -1);
  for (std::size_t w = 0; w < plan.windows.size(); ++w) {
    const TokenRange r = plan.windows[w];
    const Prediction& p = window_predictions[w];
    if (p.punct.size() != r.size() || p.caps.size() != r.size()) {
      throw LengthMismatch(w, "window prediction length differs from window size");
    }
    for (std::size_t t = r.begin; t < r.end; ++t) {
      const auto margin = static_cast<std::ptrdiff_t>(std::min(t - r.begin, r.end - 1 - t));
      if (margin > best[t]) {
        best[t] = margin;
        merged.punct[t] = p.punct[t - r.begin];
        merged.caps[t] = p.caps[t - r.begin];
      }
    }
  }
  return merged;
}

// ---------------------------------------------------------------------------
// JSONL

std::string segment_to_json(const LabeledSegment& segment) {
  ordered_json j = ordered_json::object();
  j["doc_id"] = segment.doc_id;
  ordered_json tokens = ordered_json::array();
  for (const Token& t : segment.tokens) tokens.push_back(t.surface);
  ordered_json punct = ordered_json::array();
  for (PunctLabel l : segment.punct) punct.push_back(to_string(l));
  ordered_json caps = ordered_json::array();
  for (CapTag c : segment.caps) caps.push_back(to_string(c));
  j["tokens"] = std::move(tokens);
  j["punct"] = std::move(punct);
  j["caps"] = std::move(caps);
  return j.dump();
}

void write_segments_jsonl(std::ostream& out, const std::vector<LabeledSegment>& segments) {
  for (const LabeledSegment& s : segments) out << segment_to_json(s) << '\n';
}

std::vector<LabeledSegment> read_segments_jsonl(std::istream& in, const Vocab& vocab) {
  std::vector<LabeledSegment> out;
  std::map<std::string, std::size_t> next_token_index;
  std::string text;
  std::size_t line = 0;
  const std::string& prefix = vocab.continuation_prefix();
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw MalformedRecord(line, e.what());
    }
    try {
      LabeledSegment seg;
      seg.doc_id = j.at("doc_id").get<std::string>();
      const auto& tokens = j.at("tokens");
      const auto& punct = j.at("punct");
      const auto& caps = j.at("caps");
      if (tokens.size() != punct.size() || tokens.size() != caps.size()) {
        throw MalformedRecord(line, "tokens, punct and caps differ in length");
      }
      std::size_t word = 0;
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        Token t;
        t.surface = tokens[i].get<std::string>();
        const auto id = vocab.find(t.surface);
        if (!id) throw MalformedRecord(line, "token '" + t.surface + "' not in vocabulary");
        t.vocab_id = *id;
        t.is_continuation = t.surface.rfind(prefix, 0) == 0 && !prefix.empty();
        if (i > 0 && !t.is_continuation) ++word;
        t.word_index = word;
        seg.tokens.push_back(std::move(t));
        const auto p = parse_punct_label(punct[i].get<std::string>());
        const auto c = parse_cap_tag(caps[i].get<std::string>());
        if (!p || !c) throw MalformedRecord(line, "label outside the alphabet");
        seg.punct.push_back(*p);
        seg.caps.push_back(*c);
      }
      // Positions are only known up to the windowing; number them per doc.
      seg.first_token = next_token_index[seg.doc_id];
      next_token_index[seg.doc_id] += seg.tokens.size();
      out.push_back(std::move(seg));
    } catch (const json::exception& e) {
      throw MalformedRecord(line, e.what());
    }
  }
  return out;
}

std::vector<LabeledSegment> read_segments_jsonl(const std::filesystem::path& path,
                                                const Vocab& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_segments_jsonl(in, vocab);
}

}  // namespace noktalama
