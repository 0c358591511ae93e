#include "noktalama/tagger.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "noktalama/error.hpp"

namespace noktalama {

using json = nlohmann::json;

std::vector<Prediction> TaggerBackend::predict_batch(
    const std::vector<std::vector<Token>>& batch) const {
  std::vector<Prediction> out;
  out.reserve(batch.size());
  for (const auto& tokens : batch) out.push_back(noktalama::predict(*this, tokens));
  return out;
}

void TaggerBackend::check_length(std::size_t n) const {
  if (n > max_length()) throw LengthExceeded(n, max_length());
}

Prediction predict(const TaggerBackend& backend, std::span<const Token> tokens) {
  if (tokens.size() > backend.max_length()) {
    throw LengthExceeded(tokens.size(), backend.max_length());
  }
  Prediction p = backend.predict(tokens);
  if (p.punct.size() != tokens.size() || p.caps.size() != tokens.size()) {
    throw LengthMismatch(0, backend.model_name() + " returned " +
                                std::to_string(p.punct.size()) + "/" +
                                std::to_string(p.caps.size()) + " labels for " +
                                std::to_string(tokens.size()) + " tokens");
  }
  return p;
}

namespace {

// First maximum wins, so ties resolve to the earlier label of the alphabet.
template <std::size_t N>
std::size_t argmax(const std::array<std::uint64_t, N>& counts) {
  return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) -
                                  counts.begin());
}

template <std::size_t N>
json counts_to_json(const std::array<std::uint64_t, N>& counts) {
  json a = json::array();
  for (auto c : counts) a.push_back(c);
  return a;
}

template <std::size_t N>
std::array<std::uint64_t, N> counts_from_json(const json& j) {
  std::array<std::uint64_t, N> out{};
  if (!j.is_array() || j.size() != N) throw InvalidArgument("bad histogram in model file");
  for (std::size_t i = 0; i < N; ++i) out[i] = j[i].get<std::uint64_t>();
  return out;
}

json histogram_to_json(const LabelHistogram& h) {
  return json::array({counts_to_json(h.punct), counts_to_json(h.caps)});
}

LabelHistogram histogram_from_json(const json& j) {
  LabelHistogram h;
  h.punct = counts_from_json<kPunctLabelCount>(j.at(0));
  h.caps = counts_from_json<kCapTagCount>(j.at(1));
  return h;
}

void add(LabelHistogram& h, PunctLabel p, CapTag c) {
  ++h.punct[index_of(p)];
  ++h.caps[index_of(c)];
}

}  // namespace

PunctLabel LabelHistogram::best_punct() const { return static_cast<PunctLabel>(argmax(punct)); }
CapTag LabelHistogram::best_cap() const { return static_cast<CapTag>(argmax(caps)); }

BaselineModel BaselineModel::train(const std::vector<LabeledSegment>& segments, double alpha,
                                   std::string name) {
  if (!(alpha > 0)) throw InvalidArgument("smoothing alpha must be positive");
  BaselineModel m;
  m.name_ = std::move(name);
  m.alpha_ = alpha;
  std::uint64_t seen = 0;
  for (const LabeledSegment& seg : segments) {
    const std::size_t n = seg.tokens.size();
    for (std::size_t i = 0; i < n; ++i) {
      const TokenId prev = i == 0 ? kBoundary : seg.tokens[i - 1].vocab_id;
      const TokenId next = i + 1 == n ? kBoundary : seg.tokens[i + 1].vocab_id;
      const TokenId cur = seg.tokens[i].vocab_id;
      add(m.trigrams_[{prev, cur, next}], seg.punct[i], seg.caps[i]);
      add(m.unigrams_[cur], seg.punct[i], seg.caps[i]);
      add(m.totals_, seg.punct[i], seg.caps[i]);
      ++seen;
    }
  }
  if (seen == 0) throw EmptyTrainingSet();
  m.majority_punct_ = m.totals_.best_punct();
  m.majority_cap_ = m.totals_.best_cap();
  return m;
}

Prediction BaselineModel::predict(std::span<const Token> tokens) const {
  check_length(tokens.size());
  Prediction out;
  const std::size_t n = tokens.size();
  out.punct.reserve(n);
  out.caps.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const TokenId prev = i == 0 ? kBoundary : tokens[i - 1].vocab_id;
    const TokenId next = i + 1 == n ? kBoundary : tokens[i + 1].vocab_id;
    const TokenId cur = tokens[i].vocab_id;
    const LabelHistogram* h = nullptr;
    if (auto it = trigrams_.find({prev, cur, next}); it != trigrams_.end()) {
      h = &it->second;
    } else if (auto uit = unigrams_.find(cur); uit != unigrams_.end()) {
      h = &uit->second;
    }
    out.punct.push_back(h ? h->best_punct() : majority_punct_);
    out.caps.push_back(h ? h->best_cap() : majority_cap_);
  }
  return out;
}

double BaselineModel::punct_probability(TokenId token, PunctLabel label) const {
  const auto it = unigrams_.find(token);
  const LabelHistogram& h = it == unigrams_.end() ? totals_ : it->second;
  std::uint64_t total = 0;
  for (auto c : h.punct) total += c;
  return (static_cast<double>(h.punct[index_of(label)]) + alpha_) /
         (static_cast<double>(total) + alpha_ * kPunctLabelCount);
}

double BaselineModel::cap_probability(TokenId token, CapTag tag) const {
  const auto it = unigrams_.find(token);
  const LabelHistogram& h = it == unigrams_.end() ? totals_ : it->second;
  std::uint64_t total = 0;
  for (auto c : h.caps) total += c;
  return (static_cast<double>(h.caps[index_of(tag)]) + alpha_) /
         (static_cast<double>(total) + alpha_ * kCapTagCount);
}

std::string BaselineModel::to_json() const {
  json j;
  j["format"] = "noktalama-baseline/1";
  j["name"] = name_;
  j["alpha"] = alpha_;
  j["max_length"] = max_length_;
  j["majority"] = {{"punct", to_string(majority_punct_)}, {"caps", to_string(majority_cap_)}};
  j["totals"] = histogram_to_json(totals_);
  json uni = json::array();
  for (const auto& [id, h] : unigrams_) uni.push_back(json::array({id, histogram_to_json(h)}));
  j["unigrams"] = std::move(uni);
  json tri = json::array();
  for (const auto& [key, h] : trigrams_) {
    tri.push_back(json::array({json::array({key[0], key[1], key[2]}), histogram_to_json(h)}));
  }
  j["trigrams"] = std::move(tri);
  return j.dump();
}

BaselineModel BaselineModel::from_json(std::string_view text) {
  BaselineModel m;
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != "noktalama-baseline/1") {
      throw InvalidArgument("unsupported baseline model format");
    }
    m.name_ = j.at("name").get<std::string>();
    m.alpha_ = j.at("alpha").get<double>();
    m.max_length_ = j.at("max_length").get<std::size_t>();
    const auto p = parse_punct_label(j.at("majority").at("punct").get<std::string>());
    const auto c = parse_cap_tag(j.at("majority").at("caps").get<std::string>());
    if (!p || !c) throw InvalidArgument("bad majority labels in model file");
    m.majority_punct_ = *p;
    m.majority_cap_ = *c;
    m.totals_ = histogram_from_json(j.at("totals"));
    for (const auto& e : j.at("unigrams")) {
      m.unigrams_[e.at(0).get<TokenId>()] = histogram_from_json(e.at(1));
    }
    for (const auto& e : j.at("trigrams")) {
      const auto& k = e.at(0);
      m.trigrams_[{k.at(0).get<TokenId>(), k.at(1).get<TokenId>(), k.at(2).get<TokenId>()}] =
          histogram_from_json(e.at(1));
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad baseline model file: ") + e.what());
  }
  return m;
}

void BaselineModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json() << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

BaselineModel BaselineModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

namespace {

std::vector<std::string> surfaces(std::span<const Token> tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const Token& t : tokens) out.push_back(t.surface);
  return out;
}

}  // namespace

OracleBackend::OracleBackend(const std::vector<LabeledSegment>& gold, std::string name)
    : name_(std::move(name)) {
  for (const LabeledSegment& seg : gold) {
    max_length_ = std::max(max_length_, seg.tokens.size());
    gold_[surfaces(seg.tokens)].labels.push_back(Prediction{seg.punct, seg.caps});
  }
}

Prediction OracleBackend::predict(std::span<const Token> tokens) const {
  check_length(tokens.size());
  if (tokens.empty()) return {};
  const std::lock_guard lock(mutex_);
  const auto it = gold_.find(surfaces(tokens));
  if (it == gold_.end()) throw BackendUnavailable("oracle has no gold labels for this sequence");
  Replay& replay = it->second;
  const Prediction& p = replay.labels[replay.next];
  replay.next = (replay.next + 1) % replay.labels.size();
  return p;
}

Prediction ConstantBackend::predict(std::span<const Token> tokens) const {
  return Prediction{std::vector<PunctLabel>(tokens.size(), punct_),
                    std::vector<CapTag>(tokens.size(), cap_)};
}

std::optional<ModelSpec> find_model_spec(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::vector<std::string> parts;
  std::string part;
  for (char c : lower) {
    if (c == '-' || c == '_' || c == '/' || c == '.') {
      parts.push_back(std::move(part));
      part.clear();
    } else {
      part.push_back(c);
    }
  }
  parts.push_back(std::move(part));
  for (const ModelSpec& spec : kModelSpecs) {
    if (std::find(parts.begin(), parts.end(), spec.name) != parts.end()) return spec;
  }
  return std::nullopt;
}

}  // namespace noktalama
