#include "noktalama/evaluation.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "noktalama/error.hpp"

namespace noktalama {

using ordered_json = nlohmann::ordered_json;

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> labels)
    : labels_(std::move(labels)), cells_(labels_.size() * labels_.size(), 0) {}

ConfusionMatrix ConfusionMatrix::for_punct() {
  return ConfusionMatrix(std::vector<std::string>(kPunctLabelNames.begin(), kPunctLabelNames.end()));
}

ConfusionMatrix ConfusionMatrix::for_caps() {
  return ConfusionMatrix(std::vector<std::string>(kCapTagNames.begin(), kCapTagNames.end()));
}

std::uint64_t ConfusionMatrix::cell(std::size_t gold, std::size_t pred) const {
  return cells_.at(gold * size() + pred);
}

void ConfusionMatrix::add(std::size_t gold, std::size_t pred, std::uint64_t count) {
  cells_.at(gold * size() + pred) += count;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.labels_ != labels_) throw InvalidArgument("confusion matrices have different labels");
  for (std::size_t i = 0; i < cells_.size(); ++i) cells_[i] += other.cells_[i];
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (auto c : cells_) t += c;
  return t;
}

std::uint64_t ConfusionMatrix::true_positives(std::size_t k) const { return cell(k, k); }

std::uint64_t ConfusionMatrix::false_positives(std::size_t k) const {
  std::uint64_t s = 0;
  for (std::size_t g = 0; g < size(); ++g) {
    if (g != k) s += cell(g, k);
  }
  return s;
}

std::uint64_t ConfusionMatrix::false_negatives(std::size_t k) const {
  std::uint64_t s = 0;
  for (std::size_t p = 0; p < size(); ++p) {
    if (p != k) s += cell(k, p);
  }
  return s;
}

std::size_t ConfusionMatrix::index_of_label(std::string_view label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw UnknownClass(std::string(label));
  return static_cast<std::size_t>(it - labels_.begin());
}

std::string ConfusionMatrix::to_csv() const {
  std::ostringstream out;
  out << "gold\\pred";
  for (const auto& l : labels_) out << ',' << l;
  out << '\n';
  for (std::size_t g = 0; g < size(); ++g) {
    out << labels_[g];
    for (std::size_t p = 0; p < size(); ++p) out << ',' << cell(g, p);
    out << '\n';
  }
  return out.str();
}

ConfusionMatrix confusion(std::span<const std::vector<PunctLabel>> gold,
                          std::span<const std::vector<PunctLabel>> pred) {
  ConfusionMatrix m = ConfusionMatrix::for_punct();
  add_sequences(m, gold, pred);
  return m;
}

ConfusionMatrix confusion(std::span<const std::vector<CapTag>> gold,
                          std::span<const std::vector<CapTag>> pred) {
  ConfusionMatrix m = ConfusionMatrix::for_caps();
  add_sequences(m, gold, pred);
  return m;
}

PRF prf_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  PRF r;
  if (tp + fp > 0) r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  // 2PR/(P+R) reduces to 2TP/(2TP+FP+FN), which avoids a rounding step.
  if (tp > 0) r.f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
  return r;
}

PRF precision_recall_f1(const ConfusionMatrix& m, std::size_t k) {
  if (k >= m.size()) throw UnknownClass("#" + std::to_string(k));
  return prf_from_counts(m.true_positives(k), m.false_positives(k), m.false_negatives(k));
}

PRF precision_recall_f1(const ConfusionMatrix& m, std::string_view label) {
  return precision_recall_f1(m, m.index_of_label(label));
}

EvalReport make_report(const ConfusionMatrix& m, std::string task, std::string null_label) {
  EvalReport r{std::move(task), std::move(null_label), {}, 0, 0, 0, 0, 0, m};
  std::uint64_t tp_sum = 0;
  std::uint64_t fp_sum = 0;
  std::uint64_t fn_sum = 0;
  std::uint64_t support_sum = 0;
  double f1_sum = 0;
  double f1_sum_non_null = 0;
  double weighted = 0;
  std::size_t non_null = 0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    ClassScore s{m.labels()[k], precision_recall_f1(m, k), m.support(k)};
    tp_sum += m.true_positives(k);
    fp_sum += m.false_positives(k);
    fn_sum += m.false_negatives(k);
    support_sum += s.support;
    f1_sum += s.prf.f1;
    weighted += s.prf.f1 * static_cast<double>(s.support);
    if (s.label != r.null_label) {
      f1_sum_non_null += s.prf.f1;
      ++non_null;
    }
    r.classes.push_back(std::move(s));
  }
  if (!r.classes.empty()) r.macro_f1_all = f1_sum / static_cast<double>(r.classes.size());
  if (non_null > 0) r.macro_f1 = f1_sum_non_null / static_cast<double>(non_null);
  if (support_sum > 0) r.weighted_f1 = weighted / static_cast<double>(support_sum);
  r.micro_f1 = prf_from_counts(tp_sum, fp_sum, fn_sum).f1;
  const std::uint64_t total = m.total();
  if (total > 0) r.accuracy = static_cast<double>(tp_sum) / static_cast<double>(total);
  return r;
}

void EvalReport::print(std::ostream& out) const {
  std::size_t width = 7;
  for (const auto& c : classes) width = std::max(width, c.label.size());
  const int w = static_cast<int>(width);
  const auto old_flags = out.flags();
  const auto old_precision = out.precision();
  out << "Task: " << task << '\n';
  out << std::left << std::setw(w) << "label" << std::right << std::setw(11) << "precision"
      << std::setw(9) << "recall" << std::setw(9) << "f1" << std::setw(10) << "support" << '\n';
  out << std::fixed << std::setprecision(4);
  for (const auto& c : classes) {
    out << std::left << std::setw(w) << c.label << std::right << std::setw(11) << c.prf.precision
        << std::setw(9) << c.prf.recall << std::setw(9) << c.prf.f1 << std::setw(10)
        << c.support << '\n';
  }
  out << "macro F1 (excluding " << null_label << "): " << macro_f1 << '\n';
  out << "macro F1 (all classes): " << macro_f1_all << '\n';
  out << "micro F1: " << micro_f1 << '\n';
  out << "weighted F1: " << weighted_f1 << '\n';
  out << "accuracy: " << accuracy << '\n';
  out << "confusion (rows gold, columns predicted):\n";
  out << std::left << std::setw(w) << "";
  std::size_t cw = 6;
  for (const auto& l : confusion.labels()) cw = std::max(cw, l.size() + 1);
  for (std::size_t g = 0; g < confusion.size(); ++g) {
    for (std::size_t p = 0; p < confusion.size(); ++p) {
      cw = std::max(cw, std::to_string(confusion.cell(g, p)).size() + 1);
    }
  }
  for (const auto& l : confusion.labels()) out << std::right << std::setw(static_cast<int>(cw)) << l;
  out << '\n';
  for (std::size_t g = 0; g < confusion.size(); ++g) {
    out << std::left << std::setw(w) << confusion.labels()[g];
    for (std::size_t p = 0; p < confusion.size(); ++p) {
      out << std::right << std::setw(static_cast<int>(cw)) << confusion.cell(g, p);
    }
    out << '\n';
  }
  out.flags(old_flags);
  out.precision(old_precision);
}

std::string EvalReport::to_json() const {
  ordered_json j;
  j["task"] = task;
  j["macro_f1"] = macro_f1;
  j["macro_f1_all"] = macro_f1_all;
  j["micro_f1"] = micro_f1;
  j["weighted_f1"] = weighted_f1;
  j["accuracy"] = accuracy;
  ordered_json cls = ordered_json::array();
  for (const auto& c : classes) {
    ordered_json e;
    e["label"] = c.label;
    e["precision"] = c.prf.precision;
    e["recall"] = c.prf.recall;
    e["f1"] = c.prf.f1;
    e["support"] = c.support;
    cls.push_back(std::move(e));
  }
  j["classes"] = std::move(cls);
  ordered_json cm;
  cm["labels"] = confusion.labels();
  ordered_json rows = ordered_json::array();
  for (std::size_t g = 0; g < confusion.size(); ++g) {
    ordered_json row = ordered_json::array();
    for (std::size_t p = 0; p < confusion.size(); ++p) row.push_back(confusion.cell(g, p));
    rows.push_back(std::move(row));
  }
  cm["cells"] = std::move(rows);
  j["confusion"] = std::move(cm);
  return j.dump();
}

EvalResult evaluate(const TaggerBackend& backend, const std::vector<LabeledSegment>& segments,
                    Capabilities need) {
  const Capabilities have = backend.capabilities();
  if ((need.punct && !have.punct) || (need.caps && !have.caps)) {
    throw InvalidArgument("backend " + backend.model_name() +
                          " does not support the requested task");
  }
  std::vector<std::vector<Token>> batch;
  batch.reserve(segments.size());
  for (const auto& s : segments) batch.push_back(s.tokens);
  const std::vector<Prediction> predictions = backend.predict_batch(batch);
  if (predictions.size() != segments.size()) {
    throw LengthMismatch(predictions.size(), "backend returned a different number of sequences");
  }
  ConfusionMatrix punct = ConfusionMatrix::for_punct();
  ConfusionMatrix caps = ConfusionMatrix::for_caps();
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const auto& seg = segments[s];
    const auto& pred = predictions[s];
    if (have.punct) {
      add_sequences<PunctLabel>(punct, std::span(&seg.punct, 1), std::span(&pred.punct, 1));
    }
    if (have.caps) {
      add_sequences<CapTag>(caps, std::span(&seg.caps, 1), std::span(&pred.caps, 1));
    }
  }
  EvalResult result;
  if (have.punct) result.punct = make_report(punct, "punct", "non");
  if (have.caps) result.caps = make_report(caps, "caps", "non");
  return result;
}

void BenchReport::print(std::ostream& out) const {
  const auto old_flags = out.flags();
  out << "model: " << model_name << '\n';
  if (model_spec) {
    out << "architecture: hidden " << model_spec->hidden_size << ", heads "
        << model_spec->attn_heads << ", layers " << model_spec->hidden_layers << ", "
        << model_spec->params_millions << "M parameters\n";
  }
  out << "examples: " << n_examples << '\n';
  out << std::fixed << std::setprecision(3);
  out << "wall time: " << wall_time_s << " s\n";
  out << "per example: " << per_example_ms << " ms\n";
  out << "hardware: " << hardware_note << '\n';
  out.flags(old_flags);
}

std::string BenchReport::to_json() const {
  ordered_json j;
  j["model_name"] = model_name;
  j["n_examples"] = n_examples;
  j["wall_time_s"] = wall_time_s;
  j["per_example_ms"] = per_example_ms;
  j["hardware_note"] = hardware_note;
  if (model_spec) {
    ordered_json s;
    s["name"] = std::string(model_spec->name);
    s["hidden_size"] = model_spec->hidden_size;
    s["attn_heads"] = model_spec->attn_heads;
    s["hidden_layers"] = model_spec->hidden_layers;
    s["params_millions"] = model_spec->params_millions;
    j["model_spec"] = std::move(s);
  }
  return j.dump();
}

std::string default_hardware_note() {
  std::string cpu = "unknown CPU";
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) cpu = line.substr(colon + 2);
      break;
    }
  }
  return cpu + ", " + std::to_string(std::thread::hardware_concurrency()) +
         " hardware threads, single-stream";
}

BenchReport bench(const TaggerBackend& backend, const std::vector<std::vector<Token>>& examples,
                  std::size_t n, std::string hardware_note) {
  if (n == 0) throw InvalidArgument("bench needs n >= 1");
  if (examples.empty()) throw InvalidArgument("bench needs at least one example");
  (void)predict(backend, examples.front());  // warm-up
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < n; ++i) (void)predict(backend, examples[i % examples.size()]);
  const auto stop = std::chrono::steady_clock::now();
  BenchReport r;
  r.model_name = backend.model_name();
  r.n_examples = n;
  r.wall_time_s = std::chrono::duration<double>(stop - start).count();
  r.per_example_ms = r.wall_time_s * 1000.0 / static_cast<double>(n);
  r.hardware_note = hardware_note.empty() ? default_hardware_note() : std::move(hardware_note);
  r.model_spec = find_model_spec(r.model_name);
  return r;
}

}  // namespace noktalama
