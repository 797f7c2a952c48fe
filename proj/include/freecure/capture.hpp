#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "freecure/errors.hpp"
#include "freecure/tensor.hpp"

namespace freecure {

enum class BlockGroup { down, mid, up };

inline constexpr std::string_view to_string(BlockGroup g) {
  switch (g) {
    case BlockGroup::down: return "down";
    case BlockGroup::mid: return "mid";
    case BlockGroup::up: return "up";
  }
  return "?";
}

inline BlockGroup parse_block_group(std::string_view s) {
  if (s == "down") return BlockGroup::down;
  if (s == "mid") return BlockGroup::mid;
  if (s == "up") return BlockGroup::up;
  fail(ErrorKind::invalid_argument, "unknown block group '" + std::string(s) + "'");
}

struct LayerInfo {
  BlockGroup group = BlockGroup::up;
  int layer_id = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t heads = 1;

  std::size_t spatial() const noexcept { return height * width; }
};

/// One cross-attention score tensor [heads x spatial x tokens] of pre-softmax logits.
struct AttentionRecord {
  LayerInfo layer;
  int timestep = 0;
  Tensor scores;

  std::size_t heads() const { return scores.dim(0); }
  std::size_t spatial() const { return scores.dim(1); }
  std::size_t tokens() const { return scores.dim(2); }
};

enum class RunTag { pd, fd };

inline constexpr std::string_view to_string(RunTag tag) { return tag == RunTag::pd ? "PD" : "FD"; }

/// Append-only store of records captured during one run.
class CaptureSession {
 public:
  explicit CaptureSession(RunTag tag, std::set<BlockGroup> filter = {BlockGroup::up},
                          std::optional<std::pair<int, int>> window = std::nullopt)
      : tag_(tag), filter_(std::move(filter)), window_(window) {}

  RunTag run_tag() const noexcept { return tag_; }
  const std::set<BlockGroup>& filter() const noexcept { return filter_; }
  const std::vector<AttentionRecord>& records() const noexcept { return records_; }
  bool empty() const noexcept { return records_.empty(); }

  /// Whether a record from this layer at this timestep would be kept. Window is [t_hi, t_lo].
  bool accepts(BlockGroup group, int timestep) const {
    if (!filter_.contains(group)) return false;
    if (window_ && (timestep > window_->first || timestep < window_->second)) return false;
    return true;
  }

  /// Records arrive ordered by (timestep descending, layer_id ascending).
  void append(AttentionRecord record) {
    require(record.scores.rank() == 3 && record.scores.dim(1) == record.layer.spatial(), ErrorKind::invalid_argument,
            "attention record spatial size does not match its layer resolution");
    require(record.scores.all_finite(), ErrorKind::numeric, "attention record contains non-finite logits");
    if (!records_.empty()) {
      const auto& last = records_.back();
      const bool ordered = record.timestep < last.timestep ||
                           (record.timestep == last.timestep && record.layer.layer_id > last.layer.layer_id);
      require(ordered, ErrorKind::invalid_state, "attention records must be ordered by (timestep desc, layer_id)");
    }
    records_.push_back(std::move(record));
  }

  void clear() { records_.clear(); }

 private:
  RunTag tag_;
  std::set<BlockGroup> filter_;
  std::optional<std::pair<int, int>> window_;
  std::vector<AttentionRecord> records_;
};

}  // namespace freecure
