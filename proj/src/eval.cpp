#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "symscribe/eval.hpp"

namespace symscribe {

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

MetricReport score(const std::vector<LabeledPair>& pairs) {
  if (pairs.empty()) throw EvalError(EvalError::Kind::EmptyInput, "no labeled pairs to score");
  MetricReport r;
  for (const auto& p : pairs) {
    const bool pred = p.predicted == BinaryAssertion::Positive;
    const bool gold = p.gold == BinaryAssertion::Positive;
    if (pred && gold) ++r.tp;
    else if (pred) ++r.fp;
    else if (gold) ++r.fn;
    else ++r.tn;
  }
  const double tp = r.tp, fp = r.fp, fn = r.fn, tn = r.tn;
  r.precision = ratio(tp, tp + fp);
  r.recall = ratio(tp, tp + fn);
  r.f1 = harmonic(r.precision, r.recall);

  const double neg_precision = ratio(tn, tn + fn);
  const double neg_recall = ratio(tn, tn + fp);
  const double neg_f1 = harmonic(neg_precision, neg_recall);
  const double pos_support = tp + fn, neg_support = tn + fp;
  r.weighted_f1 = (r.f1 * pos_support + neg_f1 * neg_support) / (pos_support + neg_support);
  r.balanced_accuracy = (r.recall + neg_recall) / 2.0;
  return r;
}

std::map<std::string, ClassScores> per_class_scores(const std::vector<std::string>& predicted,
                                                    const std::vector<std::string>& gold) {
  if (predicted.size() != gold.size()) {
    throw EvalError(EvalError::Kind::LengthMismatch, "predicted and gold label vectors differ in length");
  }
  if (gold.empty()) throw EvalError(EvalError::Kind::EmptyInput, "no labels to score");
  std::map<std::string, std::size_t> tp, pred_count, gold_count;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++pred_count[predicted[i]];
    ++gold_count[gold[i]];
    if (predicted[i] == gold[i]) ++tp[gold[i]];
  }
  std::map<std::string, ClassScores> out;
  for (const auto* counts : {&pred_count, &gold_count}) {
    for (const auto& [label, _] : *counts) out[label];
  }
  for (auto& [label, s] : out) {
    s.precision = ratio(tp[label], pred_count[label]);
    s.recall = ratio(tp[label], gold_count[label]);
    s.f1 = harmonic(s.precision, s.recall);
    s.support = gold_count[label];
  }
  return out;
}

double weighted_f1(const std::vector<std::string>& predicted, const std::vector<std::string>& gold) {
  const auto scores = per_class_scores(predicted, gold);
  double sum = 0.0;
  for (const auto& [_, s] : scores) sum += s.f1 * static_cast<double>(s.support);
  return sum / static_cast<double>(gold.size());
}

double metric_value(const MetricReport& r, const std::string& name) {
  if (name == "precision") return r.precision;
  if (name == "recall") return r.recall;
  if (name == "f1") return r.f1;
  if (name == "weighted_f1") return r.weighted_f1;
  if (name == "balanced_accuracy") return r.balanced_accuracy;
  throw std::invalid_argument("unknown metric " + name);
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw EvalError(EvalError::Kind::EmptyInput, "percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

BootstrapReport bootstrap(const std::vector<LabeledPair>& pairs, std::size_t iterations, std::uint64_t seed) {
  if (pairs.empty()) throw EvalError(EvalError::Kind::EmptyInput, "no labeled pairs to bootstrap");
  if (iterations == 0) throw std::invalid_argument("bootstrap needs at least one iteration");

  std::map<std::string, std::vector<const LabeledPair*>> by_note;
  for (const auto& p : pairs) by_note[p.key.note_id].push_back(&p);
  std::vector<const std::vector<const LabeledPair*>*> notes;
  for (const auto& [_, group] : by_note) notes.push_back(&group);

  BootstrapReport report;
  report.iterations = iterations;
  report.seed = seed;
  for (const auto& name : metric_names()) report.samples[name].reserve(iterations);

  std::vector<LabeledPair> sample;
  for (std::size_t i = 0; i < iterations; ++i) {
    std::mt19937_64 rng(seed + i);
    std::uniform_int_distribution<std::size_t> pick(0, notes.size() - 1);
    sample.clear();
    for (std::size_t n = 0; n < notes.size(); ++n) {
      for (const auto* p : *notes[pick(rng)]) sample.push_back(*p);
    }
    const auto r = score(sample);
    for (const auto& name : metric_names()) report.samples[name].push_back(metric_value(r, name));
  }

  for (const auto& name : metric_names()) {
    const auto& xs = report.samples[name];
    MetricSummary s;
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(xs.size()));
    s.ci_low = percentile(xs, 2.5);
    s.ci_high = percentile(xs, 97.5);
    report.metrics[name] = s;
  }
  return report;
}

double cohens_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.size() != b.size()) throw EvalError(EvalError::Kind::LengthMismatch, "rater label vectors differ in length");
  if (a.empty()) throw EvalError(EvalError::Kind::EmptyInput, "no ratings to compare");
  const double n = static_cast<double>(a.size());
  std::map<std::string, double> ca, cb;
  double agree = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1.0;
    cb[b[i]] += 1.0;
    if (a[i] == b[i]) agree += 1.0;
  }
  const double po = agree / n;
  double pe = 0.0;
  for (const auto& [label, count] : ca) {
    auto it = cb.find(label);
    if (it != cb.end()) pe += (count / n) * (it->second / n);
  }
  if (pe >= 1.0) return 1.0;
  return (po - pe) / (1.0 - pe);
}

double cohens_kappa(const std::vector<BinaryAssertion>& a, const std::vector<BinaryAssertion>& b) {
  std::vector<std::string> sa, sb;
  for (auto x : a) sa.emplace_back(to_string(x));
  for (auto x : b) sb.emplace_back(to_string(x));
  return cohens_kappa(sa, sb);
}

double pooled_recall(const std::set<MentionKey>& system_correct, const std::set<MentionKey>& reference_union) {
  if (reference_union.empty()) throw EvalError(EvalError::Kind::EmptyReference, "reference union is empty");
  for (const auto& k : system_correct) {
    if (!reference_union.count(k)) {
      throw EvalError(EvalError::Kind::SubsetViolation,
                      "system mention " + k.note_id + ":" + std::to_string(k.span.start) + "-" +
                          std::to_string(k.span.end) + " is missing from the reference union");
    }
  }
  return static_cast<double>(system_correct.size()) / static_cast<double>(reference_union.size());
}

std::string gold_jsonl_line(const GoldLabel& g) {
  nlohmann::ordered_json j;
  j["note_id"] = g.key.note_id;
  j["start"] = g.key.span.start;
  j["end"] = g.key.span.end;
  j["label"] = std::string(to_string(g.label));
  return j.dump();
}

GoldLabel parse_gold_line(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid JSON: ") + e.what());
  }
  try {
    GoldLabel g;
    g.key.note_id = j.at("note_id").get<std::string>();
    g.key.span = {j.at("start").get<std::size_t>(), j.at("end").get<std::size_t>()};
    auto label = parse_binary(j.at("label").get<std::string>());
    if (!label) throw FormatError("gold label must be 'positive' or 'non_positive'");
    g.label = *label;
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad gold record: ") + e.what());
  }
}

std::vector<GoldLabel> read_gold(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::vector<GoldLabel> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      out.push_back(parse_gold_line(line));
    } catch (const FormatError& e) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

JoinResult join_predictions(const std::vector<PipelineOutput>& predictions, const std::vector<GoldLabel>& gold) {
  std::map<MentionKey, BinaryAssertion> gold_by_key;
  for (const auto& g : gold) {
    if (!gold_by_key.emplace(g.key, g.label).second) {
      throw EvalError(EvalError::Kind::DuplicateKey, "duplicate gold key " + g.key.note_id + ":" +
                                                         std::to_string(g.key.span.start) + "-" +
                                                         std::to_string(g.key.span.end));
    }
  }
  std::map<MentionKey, BinaryAssertion> pred_by_key;
  for (const auto& o : predictions) {
    for (const auto& mr : o.mentions) pred_by_key[{o.note_id, mr.mention.span}] = mr.assertion.binary;
  }
  JoinResult out;
  for (const auto& [key, pred] : pred_by_key) {
    auto it = gold_by_key.find(key);
    if (it == gold_by_key.end()) {
      ++out.unmatched_predictions;
      continue;
    }
    out.pairs.push_back({key, pred, it->second});
  }
  out.unmatched_gold = gold_by_key.size() - out.pairs.size();
  return out;
}

std::string eval_report_json(const MetricReport& point, const BootstrapReport* boot, const JoinResult& join) {
  nlohmann::ordered_json j;
  j["pairs"] = join.pairs.size();
  j["unmatched_predictions"] = join.unmatched_predictions;
  j["unmatched_gold"] = join.unmatched_gold;
  nlohmann::ordered_json p;
  for (const auto& name : metric_names()) p[name] = metric_value(point, name);
  p["tp"] = point.tp;
  p["fp"] = point.fp;
  p["fn"] = point.fn;
  p["tn"] = point.tn;
  j["point"] = std::move(p);
  if (boot) {
    nlohmann::ordered_json b;
    b["iterations"] = boot->iterations;
    b["seed"] = boot->seed;
    b["resampling_unit"] = "note";
    for (const auto& name : metric_names()) {
      const auto& s = boot->metrics.at(name);
      b["metrics"][name] = {{"mean", s.mean}, {"sd", s.sd}, {"ci_low", s.ci_low}, {"ci_high", s.ci_high}};
    }
    for (const auto& name : metric_names()) b["samples"][name] = boot->samples.at(name);
    j["bootstrap"] = std::move(b);
  }
  return j.dump(2);
}

}  // namespace symscribe
