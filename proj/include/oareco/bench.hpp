#pragma once

// Latency measurement. Statistics are nearest-rank order statistics of the
// recorded samples: the q-quantile is the sample at sorted index
// ceil(q * n) - 1 (index 0 for q = 0).

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oareco/beamformer.hpp"
#include "oareco/domain.hpp"
#include "oareco/keyvalue.hpp"
#include "oareco/nn/model.hpp"

namespace oareco {

inline constexpr double kDefaultRealtimeHz = 25.0;
inline constexpr int kDefaultWarmupRuns = 10;
inline constexpr int kDefaultMeasuredRuns = 100;

struct TimingStats {
  std::vector<double> samples_ms;  // in execution order
  double median_ms = 0.0;
  double p05_ms = 0.0;
  double p95_ms = 0.0;
  double mean_ms = 0.0;
  double frame_rate_hz = 0.0;
  double threshold_hz = kDefaultRealtimeHz;
  bool realtime = false;
};

/// Nearest-rank quantile of unsorted samples.
double nearest_rank(std::span<const double> samples, double q);

/// Rebuilds every statistic from samples_ms and the threshold.
TimingStats timing_from_samples(std::vector<double> samples_ms, double threshold_hz);

bool is_realtime(double frame_rate_hz, double threshold_hz);

/// Runs `warmup_runs` discarded calls, then `measured_runs` timed calls on a
/// steady clock. A throwing task is reported with its run index.
TimingStats benchmark(const std::function<void()>& task, int warmup_runs, int measured_runs,
                      double threshold_hz = kDefaultRealtimeHz);

enum class Stage { das, net, e2e };
const char* to_string(Stage stage);

struct ScanFixture {
  Sinogram sinogram;
  DetectorArray array;
  ImageGrid grid;
  double sos_m_per_s = 1500.0;
};

struct StageTiming {
  Stage stage;
  TimingStats stats;
};

/// Times the requested stages. `model` is required for net and e2e; the
/// network input is the DAS image of the fixture.
std::vector<StageTiming> bench_pipeline(const ScanFixture& fixture, const nn::Model* model,
                                        const std::vector<Stage>& stages, int warmup_runs, int measured_runs,
                                        double threshold_hz = kDefaultRealtimeHz);

std::string format_timing_table(const std::vector<std::pair<std::string, TimingStats>>& rows);
void put_timing(KeyValueMap& kv, const std::string& prefix, const TimingStats& stats, bool with_samples);

}  // namespace oareco
