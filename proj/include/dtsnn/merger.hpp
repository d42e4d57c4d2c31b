#pragma once

// Merging of differential-time spike trains without going through absolute time.
//
// The first pending difference of every input is measured from the same zero
// point, so the smallest one is the next merged event. Emitting it and
// subtracting it from every other head moves that shared zero point forward.
// Both the flat M-way procedure and the binary tree of two-input merger
// elements follow this rule; ties resolve toward the lower input index.

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "dtsnn/codec.hpp"
#include "dtsnn/error.hpp"

namespace dtsnn {

using SynapseIndex = std::uint32_t;

struct MergedEvent {
  Tick delta = 0;
  SynapseIndex origin = 0;

  friend bool operator==(const MergedEvent&, const MergedEvent&) = default;
};

using MergedEventStream = std::vector<MergedEvent>;

/// Reads one train difference by difference, folding overflow symbols into
/// the returned value. Trailing overflows yield no difference.
class TrainCursor {
 public:
  TrainCursor() = default;
  explicit TrainCursor(const DiffSpikeTrain& train)
      : symbols_(train.symbols()), overflow_(train.overflow_symbol()) {}

  std::optional<Tick> next() {
    Tick pending = 0;
    while (pos_ < symbols_.size()) {
      const Symbol s = symbols_[pos_++];
      pending += s;
      if (s != overflow_) return pending;
    }
    return std::nullopt;
  }

  std::size_t consumed() const noexcept { return pos_; }

 private:
  std::span<const Symbol> symbols_;
  Symbol overflow_ = 0;
  std::size_t pos_ = 0;
};

inline unsigned common_bitwidth(std::span<const DiffSpikeTrain> trains) {
  if (trains.empty()) return 0;
  const unsigned b = trains.front().bitwidth();
  for (const auto& t : trains) {
    if (t.bitwidth() != b) {
      throw Error(ErrorCode::incompatible_trains, "trains use different bitwidths");
    }
  }
  return b;
}

/// Flat M-way merge: minimum over all heads, subtract it from the others,
/// refill the winner. Exhausted inputs hold an infinite head.
class MultiwayMerger {
 public:
  static constexpr Tick kExhausted = std::numeric_limits<Tick>::max();

  explicit MultiwayMerger(std::span<const DiffSpikeTrain> trains) {
    common_bitwidth(trains);
    cursors_.reserve(trains.size());
    heads_.reserve(trains.size());
    for (const auto& t : trains) {
      cursors_.emplace_back(t);
      heads_.push_back(cursors_.back().next().value_or(kExhausted));
    }
  }

  std::optional<MergedEvent> next() {
    std::size_t winner = heads_.size();
    Tick minimum = kExhausted;
    for (std::size_t i = 0; i < heads_.size(); ++i) {
      if (heads_[i] < minimum) {
        minimum = heads_[i];
        winner = i;
      }
    }
    if (winner == heads_.size()) return std::nullopt;
    for (std::size_t i = 0; i < heads_.size(); ++i) {
      if (i != winner && heads_[i] != kExhausted) heads_[i] -= minimum;
    }
    heads_[winner] = cursors_[winner].next().value_or(kExhausted);
    return MergedEvent{minimum, static_cast<SynapseIndex>(winner)};
  }

  const TrainCursor& cursor(std::size_t i) const { return cursors_.at(i); }

 private:
  std::vector<TrainCursor> cursors_;
  std::vector<Tick> heads_;
};

inline MergedEventStream merge_multiway(std::span<const DiffSpikeTrain> trains) {
  MultiwayMerger merger(trains);
  MergedEventStream out;
  while (auto e = merger.next()) out.push_back(*e);
  return out;
}

// ---------------------------------------------------------------------------
// Two-input merger element.

enum class HeadState : std::uint8_t { ready, needs_refill, exhausted };

struct MergerHead {
  Tick value = 0;
  HeadState state = HeadState::needs_refill;

  static constexpr MergerHead of(Tick v) noexcept { return {v, HeadState::ready}; }
  static constexpr MergerHead exhausted() noexcept { return {0, HeadState::exhausted}; }

  friend bool operator==(const MergerHead&, const MergerHead&) = default;
};

/// Upper input wins ties and contributes origin bit 0; lower contributes 1.
enum class Side : std::uint8_t { upper = 0, lower = 1 };

struct ElementStep {
  Tick delta = 0;
  Side side = Side::upper;
  MergerHead upper;
  MergerHead lower;
};

/// One comparison of a merger element. Returns nullopt when both sides are
/// exhausted. The winning side comes back as needs_refill.
inline std::optional<ElementStep> merger_element_step(MergerHead upper, MergerHead lower) {
  if (upper.state == HeadState::needs_refill || lower.state == HeadState::needs_refill) {
    throw Error(ErrorCode::invariant_violation, "merger element stepped with an unfilled head");
  }
  const bool upper_live = upper.state == HeadState::ready;
  const bool lower_live = lower.state == HeadState::ready;
  if (!upper_live && !lower_live) return std::nullopt;

  ElementStep step;
  const bool upper_wins = upper_live && (!lower_live || upper.value <= lower.value);
  if (upper_wins) {
    step.delta = upper.value;
    step.side = Side::upper;
    step.upper = MergerHead{};
    step.lower = lower_live ? MergerHead::of(lower.value - upper.value) : lower;
  } else {
    step.delta = lower.value;
    step.side = Side::lower;
    step.lower = MergerHead{};
    step.upper = upper_live ? MergerHead::of(upper.value - lower.value) : upper;
  }
  return step;
}

/// Binary tree of M-1 merger elements over inputs padded to a power of two.
/// Each level appends one origin bit, the leaf level supplying the least
/// significant one, so the accumulated bits equal the input index.
class TreeMerger {
 public:
  explicit TreeMerger(std::span<const DiffSpikeTrain> trains) {
    common_bitwidth(trains);
    std::size_t width = 1;
    depth_ = 0;
    while (width < trains.size()) {
      width <<= 1;
      ++depth_;
    }
    leaves_.resize(width);
    live_.assign(width, false);
    for (std::size_t i = 0; i < trains.size(); ++i) {
      leaves_[i] = TrainCursor(trains[i]);
      live_[i] = true;
    }
    if (depth_ > 0) {
      // heap layout: node k has children 2k+1, 2k+2; leaves hang below the last level
      nodes_.resize(width - 1);
    }
  }

  std::optional<MergedEvent> next() {
    if (depth_ == 0) {
      if (leaves_.empty() || !live_[0]) return std::nullopt;
      auto d = leaves_[0].next();
      if (!d) return std::nullopt;
      return MergedEvent{*d, 0};
    }
    return pull(0, 0);
  }

  unsigned depth() const noexcept { return depth_; }
  const TrainCursor& cursor(std::size_t i) const { return leaves_.at(i); }

 private:
  struct Element {
    MergerHead upper;
    MergerHead lower;
    SynapseIndex upper_origin = 0;
    SynapseIndex lower_origin = 0;
  };

  // Pull the next event out of node `k` sitting at `level` (root = 0).
  std::optional<MergedEvent> pull(std::size_t k, unsigned level) {
    Element& e = nodes_[k];
    refill(e.upper, e.upper_origin, 2 * k + 1, level);
    refill(e.lower, e.lower_origin, 2 * k + 2, level);
    auto step = merger_element_step(e.upper, e.lower);
    if (!step) return std::nullopt;
    e.upper = step->upper;
    e.lower = step->lower;
    const unsigned bit_pos = depth_ - 1 - level;
    const SynapseIndex below = step->side == Side::upper ? e.upper_origin : e.lower_origin;
    const auto bit = static_cast<SynapseIndex>(step->side);
    return MergedEvent{step->delta, below | (bit << bit_pos)};
  }

  void refill(MergerHead& head, SynapseIndex& origin, std::size_t child, unsigned level) {
    if (head.state != HeadState::needs_refill) return;
    std::optional<MergedEvent> ev;
    if (level + 1 == depth_) {
      const std::size_t leaf = child - nodes_.size();
      if (live_[leaf]) {
        if (const auto d = leaves_[leaf].next()) ev = MergedEvent{*d, 0};
      }
    } else {
      ev = pull(child, level + 1);
    }
    if (ev) {
      head = MergerHead::of(ev->delta);
      origin = ev->origin;
    } else {
      head = MergerHead::exhausted();
    }
  }

  unsigned depth_ = 0;
  std::vector<TrainCursor> leaves_;
  std::vector<bool> live_;
  std::vector<Element> nodes_;
};

inline MergedEventStream merge_tree(std::span<const DiffSpikeTrain> trains) {
  TreeMerger merger(trains);
  MergedEventStream out;
  while (auto e = merger.next()) out.push_back(*e);
  return out;
}

}  // namespace dtsnn
