// dtsnn: encode, merge, analyse and run differential-time spike streams.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>

#include "dtsnn/dtsnn.hpp"

namespace fs = std::filesystem;
using namespace dtsnn;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fixed(double v, int decimals = 2) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(decimals);
  ss << v;
  return ss.str();
}

void apply_limit(LabeledImages& data, std::optional<std::size_t> limit) {
  if (!limit || *limit >= data.images.size()) return;
  data.images.resize(*limit);
  if (data.labels.size() > *limit) data.labels.resize(*limit);
}

Histogram stream_histogram(const SpikeStream& s) {
  Histogram h;
  for (const auto& t : s.trains) accumulate_histogram(h, t);
  return h;
}

// ---------------------------------------------------------------------------

struct EncodeArgs {
  fs::path model, dataset, out, hist;
  std::optional<unsigned> bitwidth;
  std::optional<std::size_t> limit;
};

int run_encode(const EncodeArgs& a) {
  const auto model = load_model(a.model);
  auto data = load_dataset(a.dataset);
  apply_limit(data, a.limit);
  EncoderConfig cfg = model.encoder;
  if (a.bitwidth) cfg.bitwidth = *a.bitwidth;
  check_bitwidth(cfg.bitwidth);

  const auto encoded = encode_dataset(data.images, model.kernel, cfg);
  SpikeStream stream;
  stream.bitwidth = cfg.bitwidth;
  std::uint64_t spikes = 0, symbols = 0;
  for (const auto& sample : encoded.samples) {
    for (const auto& t : sample) {
      spikes += t.spike_count();
      symbols += t.size();
      stream.trains.push_back(t);
    }
  }
  const auto bytes = serialize_stream(stream);
  std::string hist_csv;
  if (!a.hist.empty()) {
    hist_csv = "difference,count\n";
    for (const auto& [d, c] : encoded.histogram) hist_csv += std::to_string(d) + "," + std::to_string(c) + "\n";
  }
  detail::write_file_atomic(a.out, bytes);
  if (!a.hist.empty()) detail::write_file_atomic(a.hist, hist_csv);

  const std::size_t per_sample = encoded.samples.empty() ? 0 : encoded.samples.front().size();
  std::cout << "samples " << encoded.samples.size() << ", trains per sample " << per_sample << ", bitwidth "
            << cfg.bitwidth << "\n";
  std::cout << "spikes " << spikes << ", symbols " << symbols << ", payload bits " << symbols * cfg.bitwidth
            << ", file bytes " << bytes.size() << "\n";
  if (encoded.cost) std::cout << "b*=" << encoded.cost->b_star << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct InferArgs {
  fs::path model, dataset;
  std::optional<std::size_t> limit;
  unsigned jobs = 1;
};

int run_infer(const InferArgs& a) {
  const auto model = load_model(a.model);
  auto data = load_dataset(a.dataset);
  apply_limit(data, a.limit);
  if (data.images.empty()) {
    std::cerr << "warning: no samples selected; accuracy is reported over 0 samples\n";
  } else if (data.labels.empty()) {
    std::cerr << "warning: no label file found; accuracy is reported over 0 labeled samples\n";
  }
  const auto start = Clock::now();
  const auto summary = infer_batch(model, data.images, data.labels, a.jobs);
  const double secs = seconds_since(start);

  std::size_t silent = 0;
  for (const auto& s : summary.samples) silent += s.prediction.no_spike ? 1 : 0;
  std::cout << "samples " << summary.samples.size() << ", labeled " << summary.labeled << "\n";
  std::cout << "class,labeled,correct,output_spikes\n";
  for (std::size_t c = 0; c < summary.class_total.size(); ++c) {
    std::cout << c << "," << summary.class_total[c] << "," << summary.class_correct[c] << ","
              << summary.class_spikes[c] << "\n";
  }
  std::cout << "accuracy " << fixed(100.0 * summary.accuracy()) << "% (" << summary.correct << "/"
            << summary.labeled << ")\n";
  std::cout << "silent outputs " << silent << "\n";
  std::cout << "events " << summary.events << "\n";
  std::cerr << "wall " << fixed(secs, 3) << " s with " << a.jobs << " job(s)\n";
  return 0;
}

// ---------------------------------------------------------------------------

int run_stats_hist(const fs::path& stream_path, const fs::path& out) {
  const auto h = stream_histogram(read_spike_stream(stream_path));
  std::string csv = "difference,count\n";
  std::uint64_t total = 0;
  for (const auto& [d, c] : h) {
    csv += std::to_string(d) + "," + std::to_string(c) + "\n";
    total += c;
  }
  detail::write_file_atomic(out, csv);
  std::cout << "differences " << total << ", distinct " << h.size() << "\n";
  return 0;
}

int run_stats_bitwidth(const fs::path& stream_path, unsigned bmin, unsigned bmax, const fs::path& out) {
  const auto h = stream_histogram(read_spike_stream(stream_path));
  const auto report = optimal_bitwidth(h, {bmin, bmax});
  std::string csv = "bitwidth,paper_bits,exact_bits\n";
  for (const auto& c : report.costs) {
    csv += std::to_string(c.bitwidth) + "," + std::to_string(c.paper_bits) + "," + std::to_string(c.exact_bits) + "\n";
  }
  detail::write_file_atomic(out, csv);
  const auto exact_best = std::min_element(report.costs.begin(), report.costs.end(),
                                           [](const auto& x, const auto& y) { return x.exact_bits < y.exact_bits; });
  std::cout << "b*=" << report.b_star << "\n";
  std::cout << "exact-count b*=" << exact_best->bitwidth << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

int run_merge(const fs::path& stream_path, const fs::path& out, std::optional<std::size_t> group) {
  const auto stream = read_spike_stream(stream_path);
  const std::size_t m = stream.trains.size();
  const std::size_t g = group.value_or(m);
  if (g == 0 && m != 0) throw Error(ErrorCode::invariant_violation, "--group must be positive");
  if (g != 0 && m % g != 0) {
    throw Error(ErrorCode::invariant_violation,
                std::to_string(m) + " trains do not split into groups of " + std::to_string(g));
  }
  std::string text;
  std::size_t events = 0;
  const std::span<const DiffSpikeTrain> all(stream.trains);
  for (std::size_t start = 0, k = 0; start < m; start += g, ++k) {
    const auto merged = merge_tree(all.subspan(start, g));
    if (group) text += "# sample " + std::to_string(k) + "\n";
    text += format_trace(merged);
    events += merged.size();
  }
  detail::write_file_atomic(out, text);
  std::cout << "trains " << m << ", merged events " << events << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  fs::path model, dataset;
  std::optional<std::size_t> limit;
  std::size_t synthetic = 0;
  unsigned jobs = 1;
  unsigned repeat = 1;
};

int run_bench(const BenchArgs& a) {
  NetworkModel model;
  LabeledImages data;
  if (a.synthetic > 0) {
    model = random_model({128, 10}, 1);
    data.images = random_images(a.synthetic, 2);
    std::cout << "synthetic 400-128-10 model, " << a.synthetic << " random images\n";
  } else {
    if (a.model.empty() || a.dataset.empty()) {
      throw Error(ErrorCode::io, "bench needs --model and --dataset, or --synthetic N");
    }
    model = load_model(a.model);
    data = load_dataset(a.dataset);
  }
  apply_limit(data, a.limit);
  if (data.images.empty()) {
    std::cerr << "warning: no samples selected; nothing to benchmark\n";
    return 0;
  }

  // Encoding is timed separately so events/s reflects merge + LIF work only.
  auto start = Clock::now();
  const auto encoded = encode_dataset(data.images, model.kernel, model.encoder, {1, 1});
  const double encode_s = seconds_since(start);

  std::uint64_t events = 0;
  double infer_s = 0;
  for (unsigned r = 0; r < a.repeat; ++r) {
    std::vector<std::uint64_t> per_sample(encoded.samples.size());
    start = Clock::now();
    for_each_sample(model.network, encoded.samples.size(), a.jobs, [&](NetworkState& state, std::size_t i) {
      per_sample[i] = infer_trains(state, encoded.samples[i]).events;
    });
    infer_s += seconds_since(start);
    for (auto e : per_sample) events += e;
  }
  const double inferences = static_cast<double>(encoded.samples.size()) * a.repeat;
  std::cout << "samples " << encoded.samples.size() << ", repeat " << a.repeat << ", jobs " << a.jobs << "\n";
  std::cout << "encode " << fixed(encode_s, 3) << " s, " << fixed(encoded.samples.size() / encode_s, 1)
            << " images/s\n";
  std::cout << "infer " << fixed(infer_s, 3) << " s, events " << events << "\n";
  std::cout << "events/s " << fixed(events / infer_s, 0) << "\n";
  std::cout << "inferences/s " << fixed(inferences / infer_s, 1) << "\n";
  std::cout << "end-to-end inferences/s " << fixed(inferences / (infer_s + encode_s * a.repeat), 1) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

int run_selftest(const fs::path& dir) {
  int failures = 0;
  auto check = [&](bool ok, const std::string& what) {
    std::cout << (ok ? "PASS " : "FAIL ") << what << "\n";
    if (!ok) ++failures;
  };
  const auto model_bytes = detail::read_file(dir / "tiny.lsnn");
  const auto model = parse_model(model_bytes);
  check(serialize_model(model) == model_bytes, "model file re-serializes byte-identically");

  const auto golden = read_count_table(dir / "tiny_golden.txt");
  const auto events = read_trace(dir / "tiny_events.txt");
  check(network_infer(model.network, events) == golden.at("stream"), "scripted event stream spike counts");

  const auto data = load_dataset(dir / "tiny-images-idx3-ubyte");
  const auto summary = infer_batch(model, data.images, data.labels, 2);
  for (std::size_t i = 0; i < summary.samples.size(); ++i) {
    const auto key = "sample" + std::to_string(i);
    check(golden.contains(key) && summary.samples[i].counts == golden.at(key), key + " spike counts");
  }
  check(summary.labeled > 0 && summary.correct == summary.labeled,
        "golden set accuracy " + fixed(100.0 * summary.accuracy()) + "%");
  std::cout << (failures == 0 ? "selftest passed\n" : "selftest FAILED\n");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differential-time spiking network engine"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "dtsnn 0.1.0");

  // DTSNN_THREADS supplies the --jobs default; a malformed value is an error, not ignored.
  unsigned env_jobs = 1;
  if (const char* env = std::getenv("DTSNN_THREADS"); env && *env) {
    const std::string_view text(env);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), env_jobs);
    if (ec != std::errc{} || ptr != text.data() + text.size() || env_jobs < 1 || env_jobs > 1024) {
      std::cerr << "error: DTSNN_THREADS must be an integer in [1, 1024], got '" << text << "'\n";
      return 2;
    }
  }
  auto add_jobs = [&](CLI::App* cmd, unsigned& jobs) {
    jobs = env_jobs;
    cmd->add_option("--jobs", jobs, "Worker threads (default: DTSNN_THREADS or 1)")->check(CLI::Range(1u, 1024u));
  };

  EncodeArgs enc;
  auto* encode = app.add_subcommand("encode", "Encode a dataset into a .dts spike stream");
  encode->add_option("--model", enc.model, "Model (.lsnn)")->required()->check(CLI::ExistingFile);
  encode->add_option("--dataset", enc.dataset, "IDX images file or CIFAR-10 .bin")->required()->check(CLI::ExistingFile);
  encode->add_option("--out", enc.out, "Output .dts")->required();
  encode->add_option("--bitwidth", enc.bitwidth, "Symbol bitwidth (default: the model's)")->check(CLI::Range(1u, kMaxBitwidth));
  encode->add_option("--hist", enc.hist, "Also write the difference histogram CSV");
  encode->add_option("--limit", enc.limit, "Use only the first n samples");

  InferArgs inf;
  auto* infer = app.add_subcommand("infer", "Classify a dataset and report accuracy");
  infer->add_option("--model", inf.model, "Model (.lsnn)")->required()->check(CLI::ExistingFile);
  infer->add_option("--dataset", inf.dataset, "IDX images file or CIFAR-10 .bin")->required()->check(CLI::ExistingFile);
  infer->add_option("--limit", inf.limit, "Use only the first n samples");
  add_jobs(infer, inf.jobs);

  auto* stats = app.add_subcommand("stats", "Spike stream statistics");
  stats->require_subcommand(1);
  fs::path hist_stream, hist_out;
  auto* hist = stats->add_subcommand("hist", "Histogram of spike time differences");
  hist->add_option("--stream", hist_stream, "Input .dts")->required()->check(CLI::ExistingFile);
  hist->add_option("--out", hist_out, "Output CSV (difference,count)")->required();
  fs::path bw_stream, bw_out;
  unsigned bmin = 1, bmax = 16;
  auto* bw = stats->add_subcommand("bitwidth", "Total stream bits per bitwidth and the optimum b*");
  bw->add_option("--stream", bw_stream, "Input .dts")->required()->check(CLI::ExistingFile);
  bw->add_option("--out", bw_out, "Output CSV (bitwidth,paper_bits,exact_bits)")->required();
  bw->add_option("--bmin", bmin, "Smallest bitwidth scanned")->check(CLI::Range(1u, kMaxBitwidth));
  bw->add_option("--bmax", bmax, "Largest bitwidth scanned")->check(CLI::Range(1u, kMaxBitwidth));

  fs::path merge_stream, merge_out;
  std::optional<std::size_t> merge_group;
  auto* merge = app.add_subcommand("merge", "Merge the trains of a .dts stream into an event trace");
  merge->add_option("--stream", merge_stream, "Input .dts")->required()->check(CLI::ExistingFile);
  merge->add_option("--out", merge_out, "Output trace (delta,origin per line)")->required();
  merge->add_option("--group", merge_group, "Merge each run of n consecutive trains separately (one sample each)");

  BenchArgs ben;
  auto* bench = app.add_subcommand("bench", "Measure merged events/s and inferences/s");
  bench->add_option("--model", ben.model, "Model (.lsnn)")->check(CLI::ExistingFile);
  bench->add_option("--dataset", ben.dataset, "IDX images file or CIFAR-10 .bin")->check(CLI::ExistingFile);
  bench->add_option("--synthetic", ben.synthetic, "Use a random 400-128-10 model and N random images instead");
  bench->add_option("--limit", ben.limit, "Use only the first n samples");
  bench->add_option("--repeat", ben.repeat, "Timed passes over the samples")->check(CLI::Range(1u, 1000u));
  add_jobs(bench, ben.jobs);

  fs::path fixture_dir = DTSNN_FIXTURE_DIR;
  auto* selftest = app.add_subcommand("selftest", "Check the golden fixtures");
  selftest->add_option("--fixtures", fixture_dir, "Fixture directory")->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*encode) return run_encode(enc);
    if (*infer) return run_infer(inf);
    if (*hist) return run_stats_hist(hist_stream, hist_out);
    if (*bw) {
      if (bmin > bmax) throw Error(ErrorCode::invalid_bitwidth, "--bmin exceeds --bmax");
      return run_stats_bitwidth(bw_stream, bmin, bmax, bw_out);
    }
    if (*merge) return run_merge(merge_stream, merge_out, merge_group);
    if (*bench) return run_bench(ben);
    if (*selftest) return run_selftest(fixture_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
