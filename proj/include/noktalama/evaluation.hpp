#pragma once

// Token-level precision / recall / F1, confusion matrices and timing.

#include <chrono>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "noktalama/corpus.hpp"
#include "noktalama/error.hpp"
#include "noktalama/labels.hpp"
#include "noktalama/tagger.hpp"

namespace noktalama {

/// cells[g][p] counts positions with gold label g predicted as p.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::vector<std::string> labels);

  static ConfusionMatrix for_punct();
  static ConfusionMatrix for_caps();

  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }
  std::uint64_t cell(std::size_t gold, std::size_t pred) const;
  void add(std::size_t gold, std::size_t pred, std::uint64_t count = 1);
  /// Cell-wise sum; label sets must match.
  void merge(const ConfusionMatrix& other);

  std::uint64_t total() const;
  std::uint64_t true_positives(std::size_t k) const;
  std::uint64_t false_positives(std::size_t k) const;
  std::uint64_t false_negatives(std::size_t k) const;
  std::uint64_t support(std::size_t k) const { return true_positives(k) + false_negatives(k); }
  /// Throws UnknownClass.
  std::size_t index_of_label(std::string_view label) const;

  std::string to_csv() const;
  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::vector<std::string> labels_;
  std::vector<std::uint64_t> cells_;
};

/// Accumulates gold/pred label sequences. `mask[i] == false` excludes
/// position i (padding). Throws LengthMismatch(sequence index).
template <typename Label>
void add_sequences(ConfusionMatrix& m, std::span<const std::vector<Label>> gold,
                   std::span<const std::vector<Label>> pred,
                   std::span<const std::vector<bool>> masks = {}) {
  if (gold.size() != pred.size()) throw LengthMismatch(gold.size(), "sequence counts differ");
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (gold[s].size() != pred[s].size() ||
        (!masks.empty() && masks[s].size() != gold[s].size())) {
      throw LengthMismatch(s, "gold and predicted lengths differ");
    }
    for (std::size_t i = 0; i < gold[s].size(); ++i) {
      if (!masks.empty() && !masks[s][i]) continue;
      m.add(index_of(gold[s][i]), index_of(pred[s][i]));
    }
  }
}

ConfusionMatrix confusion(std::span<const std::vector<PunctLabel>> gold,
                          std::span<const std::vector<PunctLabel>> pred);
ConfusionMatrix confusion(std::span<const std::vector<CapTag>> gold,
                          std::span<const std::vector<CapTag>> pred);

struct PRF {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

/// precision = TP/(TP+FP), recall = TP/(TP+FN), F1 = 2PR/(P+R); any value
/// whose denominator is zero is 0.
PRF precision_recall_f1(const ConfusionMatrix& m, std::size_t k);
/// Throws UnknownClass.
PRF precision_recall_f1(const ConfusionMatrix& m, std::string_view label);
PRF prf_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn);

struct ClassScore {
  std::string label;
  PRF prf;
  std::uint64_t support = 0;
};

struct EvalReport {
  std::string task;  // "punct" or "caps"
  std::string null_label;
  std::vector<ClassScore> classes;
  /// Headline: unweighted mean F1 over every class except the null label.
  double macro_f1 = 0;
  /// Unweighted mean over all classes, null label included.
  double macro_f1_all = 0;
  /// Pooled over all positions; equals accuracy.
  double micro_f1 = 0;
  /// Support-weighted mean F1 over all classes.
  double weighted_f1 = 0;
  double accuracy = 0;
  ConfusionMatrix confusion;

  void print(std::ostream& out) const;
  std::string to_json() const;
};

EvalReport make_report(const ConfusionMatrix& m, std::string task, std::string null_label);

struct EvalResult {
  std::optional<EvalReport> punct;
  std::optional<EvalReport> caps;
};

/// Runs the backend over every segment and scores both tasks the backend
/// supports. Throws InvalidArgument if `need` asks for an unsupported task.
EvalResult evaluate(const TaggerBackend& backend, const std::vector<LabeledSegment>& segments,
                    Capabilities need = {});

struct BenchReport {
  std::string model_name;
  std::size_t n_examples = 0;
  double wall_time_s = 0;
  double per_example_ms = 0;
  std::string hardware_note;
  std::optional<ModelSpec> model_spec;

  void print(std::ostream& out) const;
  std::string to_json() const;
};

/// One warm-up prediction, then exactly n timed single-stream predictions
/// cycling through `examples`. Throws InvalidArgument when n == 0 or there
/// are no examples.
BenchReport bench(const TaggerBackend& backend, const std::vector<std::vector<Token>>& examples,
                  std::size_t n = 1000, std::string hardware_note = "");

/// CPU model and core count from /proc, best effort.
std::string default_hardware_note();

}  // namespace noktalama
