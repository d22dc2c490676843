#include "oareco/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <sstream>

#include "oareco/error.hpp"

namespace oareco {

double nearest_rank(std::span<const double> samples, double q) {
  if (samples.empty()) throw InvalidInput("no samples");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidInput("quantile must lie in [0, 1]");
  std::vector<double> v(samples.begin(), samples.end());
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
  return v[rank == 0 ? 0 : rank - 1];
}

bool is_realtime(double frame_rate_hz, double threshold_hz) { return frame_rate_hz >= threshold_hz; }

TimingStats timing_from_samples(std::vector<double> samples_ms, double threshold_hz) {
  if (samples_ms.empty()) throw InvalidInput("no timing samples");
  if (!(threshold_hz > 0.0)) throw InvalidInput("realtime threshold must be positive");
  TimingStats s;
  s.median_ms = nearest_rank(samples_ms, 0.5);
  s.p05_ms = nearest_rank(samples_ms, 0.05);
  s.p95_ms = nearest_rank(samples_ms, 0.95);
  double sum = 0.0;
  for (double v : samples_ms) sum += v;
  s.mean_ms = sum / static_cast<double>(samples_ms.size());
  s.frame_rate_hz = s.median_ms > 0.0 ? 1000.0 / s.median_ms : std::numeric_limits<double>::infinity();
  s.threshold_hz = threshold_hz;
  s.realtime = is_realtime(s.frame_rate_hz, threshold_hz);
  s.samples_ms = std::move(samples_ms);
  return s;
}

TimingStats benchmark(const std::function<void()>& task, int warmup_runs, int measured_runs, double threshold_hz) {
  if (warmup_runs < 0) throw InvalidInput("warmup runs must be non-negative");
  if (measured_runs < 1) throw InvalidInput("at least one measured run is required");
  if (!(threshold_hz > 0.0)) throw InvalidInput("realtime threshold must be positive");
  auto run = [&](const char* phase, int index) {
    try {
      task();
    } catch (const std::exception& e) {
      throw NumericalFailure(std::string("benchmark task failed on ") + phase + " run " + std::to_string(index) +
                             ": " + e.what());
    }
  };
  for (int i = 0; i < warmup_runs; ++i) run("warmup", i);
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(measured_runs));
  for (int i = 0; i < measured_runs; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    run("measured", i);
    const auto t1 = std::chrono::steady_clock::now();
    samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return timing_from_samples(std::move(samples), threshold_hz);
}

const char* to_string(Stage stage) {
  switch (stage) {
    case Stage::das: return "das";
    case Stage::net: return "net";
    case Stage::e2e: return "e2e";
  }
  return "?";
}

std::vector<StageTiming> bench_pipeline(const ScanFixture& fixture, const nn::Model* model,
                                        const std::vector<Stage>& stages, int warmup_runs, int measured_runs,
                                        double threshold_hz) {
  fixture.sinogram.check_matches(fixture.array);
  const SpeedOfSound sos(fixture.sos_m_per_s);
  const DasConfig das_cfg;
  auto das = [&] { return das_reconstruct(fixture.sinogram, fixture.array, fixture.grid, sos, das_cfg); };
  const bool needs_model = std::any_of(stages.begin(), stages.end(), [](Stage s) { return s != Stage::das; });
  std::optional<Image> net_input;
  if (needs_model) {
    if (model == nullptr) throw InvalidInput("network stages need a model");
    net_input = das();
    model->infer(*net_input);  // shape check before timing
  }
  std::vector<StageTiming> out;
  for (Stage stage : stages) {
    std::function<void()> task;
    switch (stage) {
      case Stage::das: task = [&] { das(); }; break;
      case Stage::net: task = [&] { model->infer(*net_input); }; break;
      case Stage::e2e: task = [&] { model->infer(das()); }; break;
    }
    out.push_back({stage, benchmark(task, warmup_runs, measured_runs, threshold_hz)});
  }
  return out;
}

std::string format_timing_table(const std::vector<std::pair<std::string, TimingStats>>& rows) {
  std::ostringstream os;
  char line[200];
  std::snprintf(line, sizeof line, "%-12s %6s %11s %11s %11s %11s %10s %9s\n", "stage", "runs", "median ms",
                "p05 ms", "p95 ms", "mean ms", "rate Hz", "realtime");
  os << line;
  for (const auto& [name, s] : rows) {
    std::snprintf(line, sizeof line, "%-12s %6zu %11.3f %11.3f %11.3f %11.3f %10.1f %9s\n", name.c_str(),
                  s.samples_ms.size(), s.median_ms, s.p05_ms, s.p95_ms, s.mean_ms, s.frame_rate_hz,
                  s.realtime ? "yes" : "no");
    os << line;
  }
  if (!rows.empty()) os << "realtime threshold: " << rows.front().second.threshold_hz << " Hz\n";
  return os.str();
}

void put_timing(KeyValueMap& kv, const std::string& prefix, const TimingStats& s, bool with_samples) {
  kv.set(prefix + "runs", static_cast<long long>(s.samples_ms.size()));
  kv.set(prefix + "median_ms", s.median_ms);
  kv.set(prefix + "p05_ms", s.p05_ms);
  kv.set(prefix + "p95_ms", s.p95_ms);
  kv.set(prefix + "mean_ms", s.mean_ms);
  kv.set(prefix + "frame_rate_hz", s.frame_rate_hz);
  kv.set(prefix + "threshold_hz", s.threshold_hz);
  kv.set(prefix + "realtime", s.realtime ? "true" : "false");
  if (!with_samples) return;
  std::string joined;
  for (double v : s.samples_ms) {
    if (!joined.empty()) joined += ' ';
    joined += format_double(v);
  }
  kv.set(prefix + "samples_ms", joined);
}

}  // namespace oareco
