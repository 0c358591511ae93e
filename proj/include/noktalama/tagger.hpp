#pragma once

// Tagger backends: the contract shared by every model, a trigram baseline
// with backoff, replay/majority reference taggers and the model size table.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "noktalama/corpus.hpp"
#include "noktalama/labels.hpp"
#include "noktalama/tokenizer.hpp"

namespace noktalama {

struct Capabilities {
  bool punct = true;
  bool caps = true;
};

class TaggerBackend {
 public:
  virtual ~TaggerBackend() = default;

  virtual std::string model_name() const = 0;
  virtual Capabilities capabilities() const { return {}; }
  /// Longest token sequence accepted by predict().
  virtual std::size_t max_length() const { return kDefaultMaxLen; }

  /// Returns one label of each kind per input token. Throws LengthExceeded
  /// or BackendUnavailable.
  virtual Prediction predict(std::span<const Token> tokens) const = 0;

  /// Batched prediction; results are in input order.
  virtual std::vector<Prediction> predict_batch(
      const std::vector<std::vector<Token>>& batch) const;

 protected:
  void check_length(std::size_t n) const;
};

/// Free-function form of TaggerBackend::predict with the length check.
Prediction predict(const TaggerBackend& backend, std::span<const Token> tokens);

/// Label counts for one context.
struct LabelHistogram {
  std::array<std::uint64_t, kPunctLabelCount> punct{};
  std::array<std::uint64_t, kCapTagCount> caps{};

  PunctLabel best_punct() const;
  CapTag best_cap() const;
};

/// Additive-alpha smoothed trigram tagger over token ids with backoff to
/// unigram counts and then to the overall majority labels.
class BaselineModel final : public TaggerBackend {
 public:
  /// Context id used before the first and after the last token.
  static constexpr TokenId kBoundary = -1;
  using TrigramKey = std::array<TokenId, 3>;

  BaselineModel() = default;

  /// Throws EmptyTrainingSet when there is no labeled token at all.
  static BaselineModel train(const std::vector<LabeledSegment>& segments, double alpha = 1.0,
                             std::string name = "baseline");

  std::string model_name() const override { return name_; }
  std::size_t max_length() const override { return max_length_; }
  void set_max_length(std::size_t n) { max_length_ = n; }
  Prediction predict(std::span<const Token> tokens) const override;

  double alpha() const { return alpha_; }
  PunctLabel majority_punct() const { return majority_punct_; }
  CapTag majority_cap() const { return majority_cap_; }

  const std::map<TrigramKey, LabelHistogram>& trigrams() const { return trigrams_; }
  const std::map<TokenId, LabelHistogram>& unigrams() const { return unigrams_; }

  /// Smoothed relative frequency (count + alpha) / (total + alpha * |labels|)
  /// of `label` given a unigram context; falls back to the global counts.
  double punct_probability(TokenId token, PunctLabel label) const;
  double cap_probability(TokenId token, CapTag tag) const;

  /// Serialized form, keys sorted. Identical models give identical bytes.
  std::string to_json() const;
  static BaselineModel from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static BaselineModel load(const std::filesystem::path& path);

 private:
  std::string name_ = "baseline";
  double alpha_ = 1.0;
  std::size_t max_length_ = kDefaultMaxLen;
  std::map<TrigramKey, LabelHistogram> trigrams_;
  std::map<TokenId, LabelHistogram> unigrams_;
  LabelHistogram totals_;
  PunctLabel majority_punct_ = PunctLabel::None;
  CapTag majority_cap_ = CapTag::Non;
};

/// Replays gold labels for known token sequences (keyed by surfaces).
/// Sequences that occur several times with different labels are replayed in
/// the order they were given, cycling.
class OracleBackend final : public TaggerBackend {
 public:
  explicit OracleBackend(const std::vector<LabeledSegment>& gold,
                         std::string name = "oracle");
  std::string model_name() const override { return name_; }
  std::size_t max_length() const override { return max_length_; }
  Prediction predict(std::span<const Token> tokens) const override;

 private:
  struct Replay {
    std::vector<Prediction> labels;
    std::size_t next = 0;
  };
  std::string name_;
  std::size_t max_length_ = 0;
  mutable std::mutex mutex_;
  mutable std::map<std::vector<std::string>, Replay> gold_;
};

/// Predicts the same labels everywhere.
class ConstantBackend final : public TaggerBackend {
 public:
  ConstantBackend(PunctLabel punct, CapTag cap, std::string name = "majority")
      : punct_(punct), cap_(cap), name_(std::move(name)) {}
  std::string model_name() const override { return name_; }
  std::size_t max_length() const override { return SIZE_MAX; }
  Prediction predict(std::span<const Token> tokens) const override;

 private:
  PunctLabel punct_;
  CapTag cap_;
  std::string name_;
};

/// Architecture of one of the five encoder sizes.
struct ModelSpec {
  std::string_view name;
  int hidden_size;
  int attn_heads;
  int hidden_layers;
  double params_millions;
};

inline constexpr std::array<ModelSpec, 5> kModelSpecs = {{
    {"tiny", 128, 2, 2, 4.6},
    {"mini", 256, 4, 4, 11.6},
    {"small", 512, 8, 4, 29.6},
    {"medium", 512, 8, 8, 42.2},
    {"base", 768, 12, 12, 110.7},
}};

/// Looks a size up by name, case-insensitively; also matches names that
/// contain the size as a dash/underscore separated part ("bert-tiny-tr").
std::optional<ModelSpec> find_model_spec(std::string_view name);

}  // namespace noktalama
