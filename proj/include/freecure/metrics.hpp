#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "freecure/errors.hpp"
#include "freecure/tensor.hpp"

namespace freecure {

// Adapter contracts for the scoring models.

class TextImageScorer {
 public:
  virtual ~TextImageScorer() = default;
  virtual std::vector<double> embed_text(std::string_view text) const = 0;
  virtual std::vector<double> embed_image(const Image& image) const = 0;
};

class FaceDetector {
 public:
  virtual ~FaceDetector() = default;
  /// Face crop, or nothing when no face is found.
  virtual std::optional<Image> detect(const Image& image) const = 0;
};

class FaceEmbedder {
 public:
  virtual ~FaceEmbedder() = default;
  virtual std::vector<double> embed(const Image& face) const = 0;
};

class PerceptualDistance {
 public:
  virtual ~PerceptualDistance() = default;
  virtual double distance(const Image& a, const Image& b) const = 0;
};

inline double cosine(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size() && !a.empty(), ErrorKind::invalid_argument, "cosine: embedding sizes differ");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  require(na > 0.0 && nb > 0.0, ErrorKind::numeric, "cosine: zero-norm embedding");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// PC: 100 x cosine(text, image).
inline double prompt_consistency(const Image& image, std::string_view prompt, const TextImageScorer& scorer) {
  return 100.0 * cosine(scorer.embed_text(prompt), scorer.embed_image(image));
}

/// IF: 100 x cosine of face embeddings; nothing when either face is undetected.
inline std::optional<double> identity_fidelity(const Image& image, const Image& reference, const FaceDetector& detector,
                                               const FaceEmbedder& embedder) {
  const auto face = detector.detect(image);
  const auto ref = detector.detect(reference);
  if (!face || !ref) return std::nullopt;
  return 100.0 * cosine(embedder.embed(*face), embedder.embed(*ref));
}

struct DiversityItem {
  std::string name;   // canonical ordering key (e.g. run directory)
  std::string group;  // results sharing a group are compared pairwise
  Image image;
};

/// Face Div.: per group, a seeded pick of up to `per_group` results; mean of 100 x distance
/// over every unordered pair inside each pick.
inline std::optional<double> face_diversity(std::vector<DiversityItem> items, const PerceptualDistance& dist,
                                            std::uint64_t seed, std::size_t per_group = 5) {
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  std::map<std::string, std::vector<const DiversityItem*>> groups;
  for (const auto& it : items) groups[it.group].push_back(&it);
  std::mt19937_64 engine(seed);
  double acc = 0.0;
  std::size_t pairs = 0;
  for (auto& [name, members] : groups) {
    for (std::size_t i = members.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>((engine() >> 11) % i);
      std::swap(members[i - 1], members[j]);
    }
    if (members.size() > per_group) members.resize(per_group);
    for (std::size_t a = 0; a < members.size(); ++a)
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        acc += 100.0 * dist.distance(members[a]->image, members[b]->image);
        ++pairs;
      }
  }
  if (pairs == 0) return std::nullopt;
  return acc / static_cast<double>(pairs);
}

inline double round2(double v) { return std::round(v * 100.0) / 100.0; }

/// Fixed two-decimal rendering, locale independent.
inline std::string format2(double v, bool sign = false) {
  char buf[64];
  const double r = round2(v);
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, r == 0.0 ? 0.0 : r, std::chars_format::fixed, 2);
  std::string s(buf, end);
  if (sign && r > 0.0) s.insert(s.begin(), '+');
  return s;
}

inline std::optional<double> percent_delta(double baseline, double enhanced) {
  if (baseline == 0.0) return std::nullopt;
  return 100.0 * (enhanced - baseline) / baseline;
}

struct MetricsReport {
  std::optional<double> pc;
  std::optional<double> if_score;
  std::optional<double> face_div;
  std::optional<double> pc_times_if;
  std::map<std::string, std::optional<double>> deltas;  // percent vs baseline
  std::optional<int> group;
  std::size_t count = 0;
  std::size_t if_missing = 0;
};

inline MetricsReport with_composite(MetricsReport r) {
  if (r.pc && r.if_score) r.pc_times_if = *r.pc * *r.if_score / 100.0;
  return r;
}

/// Adds PC x IF to the enhanced report and percent deltas against the baseline.
inline MetricsReport composite_and_deltas(const MetricsReport& baseline, const MetricsReport& enhanced) {
  const MetricsReport b = with_composite(baseline);
  MetricsReport out = with_composite(enhanced);
  auto delta = [](const std::optional<double>& x, const std::optional<double>& y) -> std::optional<double> {
    if (!x || !y) return std::nullopt;
    return percent_delta(*x, *y);
  };
  out.deltas["pc"] = delta(b.pc, out.pc);
  out.deltas["if"] = delta(b.if_score, out.if_score);
  out.deltas["face_div"] = delta(b.face_div, out.face_div);
  out.deltas["pc_times_if"] = delta(b.pc_times_if, out.pc_times_if);
  return out;
}

struct GroupedRecord {
  int attribute_count = 0;
  double pc = 0.0;
};

struct GroupedRow {
  int bucket = 0;
  std::size_t count = 0;
  double mean_pc = 0.0;
};

struct GroupedSummary {
  std::vector<GroupedRow> rows;  // buckets 1..3 that have records
  std::optional<double> overall;
  std::vector<std::string> notices;
};

inline GroupedSummary grouped_summary(const std::vector<GroupedRecord>& records) {
  GroupedSummary out;
  double total = 0.0;
  for (const auto& r : records) {
    require(r.attribute_count >= 1 && r.attribute_count <= 3, ErrorKind::invalid_argument,
            "attribute count " + std::to_string(r.attribute_count) + " outside buckets {1,2,3}");
    total += r.pc;
  }
  for (int bucket = 1; bucket <= 3; ++bucket) {
    GroupedRow row{bucket, 0, 0.0};
    for (const auto& r : records) {
      if (r.attribute_count != bucket) continue;
      row.mean_pc += r.pc;
      ++row.count;
    }
    if (row.count == 0) {
      out.notices.push_back("bucket " + std::to_string(bucket) + " has no records; row omitted");
      continue;
    }
    row.mean_pc /= static_cast<double>(row.count);
    out.rows.push_back(row);
  }
  if (!records.empty()) out.overall = total / static_cast<double>(records.size());
  return out;
}

}  // namespace freecure
