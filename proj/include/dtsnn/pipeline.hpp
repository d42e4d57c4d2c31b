#pragma once

// Image -> encoder -> merger tree -> LIF layers, and batch inference on top.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

#include "dtsnn/encoder.hpp"
#include "dtsnn/image.hpp"
#include "dtsnn/lif.hpp"
#include "dtsnn/merger.hpp"
#include "dtsnn/model.hpp"

namespace dtsnn {

struct SampleResult {
  std::vector<std::uint64_t> counts;
  Classification prediction;
  std::uint64_t events = 0;  // merged first-layer events
};

/// Runs pre-encoded trains through the tree merger and the network. `state` is reset first.
inline SampleResult infer_trains(NetworkState& state, std::span<const DiffSpikeTrain> trains) {
  state.reset();
  TreeMerger merger(trains);
  while (auto e = merger.next()) state.feed(*e);
  state.flush();
  SampleResult r;
  r.counts = state.output_counts();
  r.prediction = classify(r.counts);
  r.events = state.events_consumed();
  return r;
}

inline SampleResult infer_image(const NetworkModel& model, NetworkState& state, const Image& image) {
  const auto trains = encode_image(image, model.kernel, model.encoder);
  return infer_trains(state, trains);
}

struct BatchSummary {
  std::vector<SampleResult> samples;
  std::size_t correct = 0;
  std::size_t labeled = 0;
  std::uint64_t events = 0;
  /// Per class: how many samples carry the label and how many of those were hit.
  std::vector<std::size_t> class_total;
  std::vector<std::size_t> class_correct;
  /// Output spike counts summed over all samples.
  std::vector<std::uint64_t> class_spikes;

  double accuracy() const noexcept { return labeled == 0 ? 0.0 : static_cast<double>(correct) / labeled; }
};

/// Calls `fn(state, i)` for every i in [0, count) on `jobs` workers, each
/// owning a private NetworkState. The first exception stops the pool and is rethrown.
template <class Fn>
void for_each_sample(const LifNetwork& network, std::size_t count, unsigned jobs, Fn&& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(1, count))));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    try {
      NetworkState state(network);
      for (std::size_t i = next++; i < count; i = next++) fn(state, i);
    } catch (...) {
      std::lock_guard lock(failure_mu);
      if (!failure) failure = std::current_exception();
      next = count;
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(jobs);
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

/// Infers every image with `jobs` workers. Results are stored by sample index
/// so the summary does not depend on scheduling.
inline BatchSummary infer_batch(const NetworkModel& model, std::span<const Image> images,
                                std::span<const std::uint8_t> labels, unsigned jobs = 1) {
  BatchSummary out;
  out.samples.resize(images.size());
  for_each_sample(model.network, images.size(), jobs, [&](NetworkState& state, std::size_t i) {
    out.samples[i] = infer_image(model, state, images[i]);
  });

  const std::size_t classes = model.network.output_fan();
  out.class_total.assign(classes, 0);
  out.class_correct.assign(classes, 0);
  out.class_spikes.assign(classes, 0);
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    const auto& s = out.samples[i];
    out.events += s.events;
    for (std::size_t c = 0; c < classes; ++c) out.class_spikes[c] += s.counts[c];
    if (i < labels.size()) {
      ++out.labeled;
      const std::size_t label = labels[i];
      const bool hit = s.prediction.index == label;
      if (label < classes) {
        ++out.class_total[label];
        if (hit) ++out.class_correct[label];
      }
      if (hit) ++out.correct;
    }
  }
  return out;
}

}  // namespace dtsnn
