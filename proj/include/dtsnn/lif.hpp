#pragma once

// Event-driven LIF layers with beta = 0.5 and theta = 1.
//
//   P_k = P_{k-1} * 0.5^dt + sum_i w_i s_i - s_out,  s_out = theta if P >= theta
//
// Potentials are signed fixed point. Decay is an arithmetic right shift,
// weights are aligned to the potential format by a left shift, so nothing
// here multiplies.

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dtsnn/codec.hpp"
#include "dtsnn/error.hpp"
#include "dtsnn/fixed_point.hpp"
#include "dtsnn/merger.hpp"

namespace dtsnn {

using Potential = std::int64_t;
using NeuronIndex = std::uint32_t;

/// Multiply P by 0.5^dt. Rounds toward -inf for negative P.
inline Potential decay(Potential p, Tick dt, const FixedPointFormat& fmt = kDefaultPotentialFormat) noexcept {
  const Tick shift = std::min<Tick>(dt, fmt.total_bits - 1);
  return p >> shift;
}

/// Dense weights, one row per input synapse so a synapse index addresses its
/// row directly.
class LayerWeights {
 public:
  LayerWeights() = default;
  LayerWeights(std::size_t fan_in, std::size_t fan_out, FixedPointFormat format = kDefaultWeightFormat)
      : fan_in_(fan_in), fan_out_(fan_out), format_(format), raw_(fan_in * fan_out, 0) {
    format_.validate();
  }
  LayerWeights(std::size_t fan_in, std::size_t fan_out, FixedPointFormat format, std::vector<std::int32_t> raw)
      : fan_in_(fan_in), fan_out_(fan_out), format_(format), raw_(std::move(raw)) {
    format_.validate();
    if (raw_.size() != fan_in_ * fan_out_) {
      throw Error(ErrorCode::invariant_violation, "weight matrix is incomplete");
    }
    for (const auto w : raw_) {
      if (!format_.contains(w)) {
        throw Error(ErrorCode::invariant_violation,
                    "weight " + std::to_string(w) + " outside format bounds");
      }
    }
  }

  std::size_t fan_in() const noexcept { return fan_in_; }
  std::size_t fan_out() const noexcept { return fan_out_; }
  const FixedPointFormat& format() const noexcept { return format_; }
  const std::vector<std::int32_t>& raw() const noexcept { return raw_; }

  std::span<const std::int32_t> row(std::size_t synapse) const {
    return {raw_.data() + synapse * fan_out_, fan_out_};
  }

  std::int32_t& at(std::size_t synapse, std::size_t neuron) { return raw_.at(synapse * fan_out_ + neuron); }
  std::int32_t at(std::size_t synapse, std::size_t neuron) const { return raw_.at(synapse * fan_out_ + neuron); }

  friend bool operator==(const LayerWeights&, const LayerWeights&) = default;

 private:
  std::size_t fan_in_ = 0;
  std::size_t fan_out_ = 0;
  FixedPointFormat format_ = kDefaultWeightFormat;
  std::vector<std::int32_t> raw_;
};

struct LayerState {
  std::vector<Potential> potentials;
  std::vector<std::uint64_t> spike_counts;
  /// Ticks since this layer last emitted, i.e. the gap carried by its next output.
  Tick since_output = 0;

  explicit LayerState(std::size_t neurons = 0) : potentials(neurons, 0), spike_counts(neurons, 0) {}

  void reset() {
    std::fill(potentials.begin(), potentials.end(), 0);
    std::fill(spike_counts.begin(), spike_counts.end(), 0);
    since_output = 0;
  }
};

/// Process one input timestamp: decay by dt, add the rows of every synapse that
/// spiked (repeats add twice), then threshold each neuron once with soft reset.
/// Fired neurons are appended to `fired` in ascending order.
inline void integrate_timestamp(LayerState& layer, const LayerWeights& weights,
                                const FixedPointFormat& fmt, Tick dt,
                                std::span<const SynapseIndex> synapses,
                                std::vector<NeuronIndex>& fired) {
  if (weights.format().fraction_bits > fmt.fraction_bits) {
    throw Error(ErrorCode::invariant_violation, "weight format finer than potential format");
  }
  if (layer.potentials.size() != weights.fan_out()) {
    throw Error(ErrorCode::fan_mismatch, "layer state does not match weight fan-out");
  }
  auto& p = layer.potentials;
  if (dt > 0) {
    const Tick shift = std::min<Tick>(dt, fmt.total_bits - 1);
    for (auto& v : p) v >>= shift;
  }
  const unsigned align = fmt.fraction_bits - weights.format().fraction_bits;
  const Potential lo = fmt.min_raw();
  const Potential hi = fmt.max_raw();
  for (const SynapseIndex s : synapses) {
    if (s >= weights.fan_in()) {
      throw Error(ErrorCode::addressing, "synapse " + std::to_string(s) + " out of range (fan-in " +
                                             std::to_string(weights.fan_in()) + ")");
    }
    const auto row = weights.row(s);
    for (std::size_t j = 0; j < row.size(); ++j) {
      const Potential v = p[j] + (static_cast<Potential>(row[j]) << align);
      p[j] = v < lo ? lo : (v > hi ? hi : v);
    }
  }
  const Potential theta = fmt.one();
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] >= theta) {
      p[j] -= theta;
      ++layer.spike_counts[j];
      fired.push_back(static_cast<NeuronIndex>(j));
    }
  }
}

inline std::vector<NeuronIndex> integrate_timestamp(LayerState& layer, const LayerWeights& weights, Tick dt,
                                                    std::span<const SynapseIndex> synapses,
                                                    const FixedPointFormat& fmt = kDefaultPotentialFormat) {
  std::vector<NeuronIndex> fired;
  integrate_timestamp(layer, weights, fmt, dt, synapses, fired);
  return fired;
}

/// Feedforward stack of LIF layers sharing one potential format.
struct LifNetwork {
  FixedPointFormat potential_format = kDefaultPotentialFormat;
  std::vector<LayerWeights> layers;

  std::size_t input_fan() const noexcept { return layers.empty() ? 0 : layers.front().fan_in(); }
  std::size_t output_fan() const noexcept { return layers.empty() ? 0 : layers.back().fan_out(); }

  void validate() const {
    potential_format.validate();
    if (layers.empty()) throw Error(ErrorCode::invariant_violation, "network has no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      if (layers[l].format().fraction_bits > potential_format.fraction_bits) {
        throw Error(ErrorCode::invariant_violation, "weight format finer than potential format");
      }
      if (l > 0 && layers[l].fan_in() != layers[l - 1].fan_out()) {
        throw Error(ErrorCode::fan_mismatch, "layer " + std::to_string(l) + " fan-in does not match layer " +
                                                 std::to_string(l - 1) + " size");
      }
    }
  }
};

/// Mutable per-inference state. One instance per thread; the network is shared read-only.
class NetworkState {
 public:
  explicit NetworkState(const LifNetwork& net) : net_(&net) {
    net.validate();
    layers_.reserve(net.layers.size());
    for (const auto& w : net.layers) layers_.emplace_back(w.fan_out());
    scratch_.resize(net.layers.size());
  }

  void reset() {
    for (auto& l : layers_) l.reset();
    pending_.clear();
    pending_gap_ = 0;
    have_pending_ = false;
    output_events_.clear();
    events_in_ = 0;
  }

  /// Keep the output layer's spikes as a merged-event stream.
  void record_output(bool on) { record_output_ = on; }
  const MergedEventStream& output_events() const noexcept { return output_events_; }

  /// Events with delta 0 join the current timestamp; the batch is processed
  /// once the next timestamp begins or on flush().
  void feed(const MergedEvent& e) {
    if (e.origin >= net_->input_fan()) {
      throw Error(ErrorCode::fan_mismatch, "event origin " + std::to_string(e.origin) +
                                               " exceeds input fan " + std::to_string(net_->input_fan()));
    }
    ++events_in_;
    if (have_pending_ && e.delta == 0) {
      pending_.push_back(e.origin);
      return;
    }
    flush();
    have_pending_ = true;
    pending_gap_ = e.delta;
    pending_.push_back(e.origin);
  }

  void flush() {
    if (!have_pending_) return;
    propagate(pending_gap_, pending_);
    pending_.clear();
    have_pending_ = false;
  }

  void run(std::span<const MergedEvent> events) {
    for (const auto& e : events) feed(e);
    flush();
  }

  const std::vector<LayerState>& layers() const noexcept { return layers_; }
  const std::vector<std::uint64_t>& output_counts() const { return layers_.back().spike_counts; }
  std::uint64_t events_consumed() const noexcept { return events_in_; }

 private:
  // A layer's outputs at time t are the next layer's inputs at time t.
  void propagate(Tick gap, std::span<const SynapseIndex> inputs) {
    const auto& fmt = net_->potential_format;
    std::span<const SynapseIndex> in = inputs;
    Tick dt = gap;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      auto& state = layers_[l];
      auto& fired = scratch_[l];
      fired.clear();
      state.since_output += dt;
      integrate_timestamp(state, net_->layers[l], fmt, dt, in, fired);
      if (fired.empty()) return;
      dt = state.since_output;
      state.since_output = 0;
      in = fired;
    }
    if (record_output_) {
      for (std::size_t i = 0; i < in.size(); ++i) output_events_.push_back({i == 0 ? dt : 0, in[i]});
    }
  }

  const LifNetwork* net_;
  std::vector<LayerState> layers_;
  std::vector<std::vector<SynapseIndex>> scratch_;
  std::vector<SynapseIndex> pending_;
  Tick pending_gap_ = 0;
  bool have_pending_ = false;
  bool record_output_ = false;
  MergedEventStream output_events_;
  std::uint64_t events_in_ = 0;
};

inline std::vector<std::uint64_t> network_infer(const LifNetwork& net, std::span<const MergedEvent> events) {
  NetworkState state(net);
  state.run(events);
  return state.output_counts();
}

struct Classification {
  std::size_t index = 0;
  bool no_spike = false;
};

/// Argmax of spike counts, lowest index on ties.
inline Classification classify(std::span<const std::uint64_t> counts) {
  if (counts.empty()) throw Error(ErrorCode::empty_input, "no output counts to classify");
  const auto it = std::max_element(counts.begin(), counts.end());
  return {static_cast<std::size_t>(it - counts.begin()), *it == 0};
}

}  // namespace dtsnn
