#include "oareco/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "oareco/beamformer.hpp"
#include "oareco/bench.hpp"
#include "oareco/cost_model.hpp"
#include "oareco/error.hpp"
#include "oareco/forward_model.hpp"
#include "oareco/keyvalue.hpp"
#include "oareco/mb_solver.hpp"
#include "oareco/metrics.hpp"
#include "oareco/nn/model.hpp"
#include "oareco/oarr.hpp"
#include "oareco/phantom.hpp"

namespace oareco::cli {

namespace fs = std::filesystem;

namespace {

struct GeometryOptions {
  std::string preset = "desk";
  std::string file;
  int grid = 0;
  double pixel_size = 0.0;
  double sos = 0.0;
};

struct ModelOptions {
  std::string arch = "default";
  std::string weights;
  double width = 0.0;
  long long random_weights = -1;
};

struct Options {
  std::string out;
  std::uint64_t seed = 0;
  GeometryOptions geometry;
  ModelOptions model;

  // simulate
  std::string phantom = "disks";
  int count = 5;
  int num = 1;
  double noise_std = 0.0;
  bool save_operator = false;

  // reconstruct / bench
  std::string method;
  std::string input;
  std::string interp = "linear";
  int max_iters = 100;
  std::string nonneg = "true";
  double stop_tol = 1e-6;
  std::string operator_path;

  // analyze
  int input_size = 0;
  unsigned long long fit_params = 0;
  double tol = 0.10;
  bool per_layer = false;
  bool with_das = false;

  // evaluate
  std::string pred_dir;
  std::string ref_dir;
  std::string sino_dir;

  // bench
  int runs = kDefaultMeasuredRuns;
  int warmup = kDefaultWarmupRuns;
  double threshold_hz = kDefaultRealtimeHz;
};

void add_geometry_options(CLI::App* app, Options& o) {
  app->add_option("--preset", o.geometry.preset, "Base geometry: desk or full")
      ->check(CLI::IsMember({"desk", "full"}));
  app->add_option("--geometry-file", o.geometry.file, "key=value geometry file (overrides --preset)");
  app->add_option("--grid", o.geometry.grid, "Image side in pixels")->check(CLI::PositiveNumber);
  app->add_option("--pixel-size", o.geometry.pixel_size, "Pixel size in meters")->check(CLI::PositiveNumber);
  app->add_option("--sos", o.geometry.sos, "Speed of sound in m/s")->check(CLI::PositiveNumber);
}

void add_model_options(CLI::App* app, Options& o) {
  app->add_option("--arch", o.model.arch, "Network: 'default' or an architecture sidecar file");
  app->add_option("--weights", o.model.weights, "OARR1 weight archive");
  app->add_option("--width", o.model.width, "Width multiplier override")->check(CLI::PositiveNumber);
  app->add_option("--random-weights", o.model.random_weights, "Use seeded random weights instead of a file")
      ->check(CLI::NonNegativeNumber);
}

ScanGeometry resolve_geometry(const GeometryOptions& g, const std::optional<ScanGeometry>& base) {
  ScanGeometry geo;
  if (!g.file.empty()) {
    geo = get_geometry(KeyValueMap::load(g.file));
  } else if (base) {
    geo = *base;
  } else {
    geo = g.preset == "full" ? full_scale_geometry() : desk_scale_geometry();
  }
  if (g.grid > 0) geo.grid.side_px = g.grid;
  if (g.pixel_size > 0.0) geo.grid.pixel_size_m = g.pixel_size;
  if (g.sos > 0.0) geo.sos_m_per_s = g.sos;
  geo.validate();
  SpeedOfSound{geo.sos_m_per_s};
  return geo;
}

std::string geometry_key(const ScanGeometry& g) {
  KeyValueMap kv;
  put_geometry(kv, g);
  return kv.to_string();
}

std::vector<fs::path> list_arrays(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InvalidInput("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".oarr") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InvalidInput("no .oarr files in " + dir.string());
  return files;
}

std::vector<fs::path> list_inputs(const fs::path& input) {
  if (fs::is_directory(input)) return list_arrays(input);
  if (!fs::is_regular_file(input)) throw InvalidInput("input not found: " + input.string());
  return {input};
}

std::string indexed_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d.oarr", i);
  return buf;
}

std::optional<ScanGeometry> sinogram_geometry(const fs::path& sino_path) {
  const fs::path meta = metadata_path(sino_path);
  if (!fs::exists(meta)) return std::nullopt;
  const KeyValueMap kv = KeyValueMap::load(meta);
  if (!kv.contains("side_px")) return std::nullopt;
  return get_geometry(kv);
}

bool parse_bool(const std::string& text, const std::string& what) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw InvalidInput(what + " must be true or false, got '" + text + "'");
}

nn::ArchConfig resolve_arch(const ModelOptions& m, int input_size) {
  nn::ArchConfig arch;
  if (m.arch == "default") {
    arch = nn::default_arch(input_size);
  } else {
    arch = nn::arch_from_sidecar(KeyValueMap::load(m.arch));
  }
  if (m.width > 0.0) arch.width_multiplier = m.width;
  arch.validate();
  return arch;
}

nn::Model load_model(const ModelOptions& m, int input_size, bool allow_default_random) {
  const nn::ArchConfig arch = resolve_arch(m, input_size);
  nn::ModelWeights weights;
  if (!m.weights.empty()) {
    weights = nn::load_weights(m.weights);
  } else if (m.random_weights >= 0) {
    weights = nn::random_weights(arch, static_cast<std::uint64_t>(m.random_weights));
  } else if (allow_default_random) {
    weights = nn::random_weights(arch, 0);
  } else {
    throw InvalidInput("the network method needs --weights or --random-weights");
  }
  return nn::Model::build(arch, weights);
}

/// Prints the table; writes <out>/<name>.txt and <out>/<name>.kv when an
/// output directory is set, otherwise prints the key=value block as well.
void emit_report(std::ostream& out, const std::string& out_dir, const std::string& name, const std::string& table,
                 const KeyValueMap& kv) {
  out << table;
  if (out_dir.empty()) {
    out << "\n" << kv.to_string();
    return;
  }
  fs::create_directories(out_dir);
  std::ofstream(fs::path(out_dir) / (name + ".txt")) << table;
  kv.save(fs::path(out_dir) / (name + ".kv"));
  out << "report: " << (fs::path(out_dir) / (name + ".kv")).string() << "\n";
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const Options& o, std::ostream& out) {
  const ScanGeometry geo = resolve_geometry(o.geometry, std::nullopt);
  if (o.noise_std < 0.0) throw InvalidInput("--noise-std must be non-negative");
  std::vector<fs::path> images;
  if (o.phantom.rfind("image:", 0) == 0 && fs::is_directory(o.phantom.substr(6))) {
    for (const auto& entry : fs::directory_iterator(o.phantom.substr(6))) {
      if (entry.is_regular_file() && entry.path().extension() == ".pgm") images.push_back(entry.path());
    }
    std::sort(images.begin(), images.end());
    if (images.empty()) throw InvalidInput("no .pgm images in " + o.phantom.substr(6));
  }
  const int num = images.empty() ? o.num : static_cast<int>(images.size());

  const SparseOperator op = build_forward_operator(geo);
  const fs::path root(o.out);
  fs::create_directories(root / "sinograms");
  fs::create_directories(root / "phantoms");
  KeyValueMap geo_kv;
  put_geometry(geo_kv, geo);
  geo_kv.save(root / "geometry.meta");
  if (o.save_operator) save_operator(root / "operator.oarr", op);

  for (int i = 0; i < num; ++i) {
    const std::uint64_t seed = o.seed + static_cast<std::uint64_t>(i);
    const Image phantom = images.empty() ? make_phantom(o.phantom, geo.grid, o.count, seed)
                                         : image_phantom(geo.grid, images[static_cast<std::size_t>(i)]);
    const Sinogram sino = simulate_sinogram(phantom, op, o.noise_std, seed ^ 0x5eed5eedULL);
    save_sinogram(root / "sinograms" / indexed_name(i), sino, geo);
    save_image(root / "phantoms" / indexed_name(i), phantom, "phantom");
  }
  out << "simulated " << num << " scan(s): " << geo.array.num_elements << " elements x " << geo.num_samples
      << " samples, grid " << geo.grid.side_px << "x" << geo.grid.side_px << ", operator nnz " << op.nnz() << "\n"
      << "written to " << root.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- reconstruct

int cmd_reconstruct(const Options& o, std::ostream& out) {
  const std::vector<fs::path> inputs = list_inputs(o.input);
  const bool nonneg = parse_bool(o.nonneg, "--nonneg");
  MbConfig mb_cfg{o.max_iters, nonneg, o.stop_tol};
  mb_cfg.validate();
  DasConfig das_cfg;
  das_cfg.interpolation = o.interp == "nearest" ? Interpolation::nearest : Interpolation::linear;

  // Validate every input and settle one geometry before reconstructing.
  std::optional<ScanGeometry> geo;
  std::vector<Sinogram> sinos;
  for (const fs::path& p : inputs) {
    const ScanGeometry g = resolve_geometry(o.geometry, sinogram_geometry(p));
    if (geo && geometry_key(*geo) != geometry_key(g)) {
      throw InvalidInput("inputs use different geometries; reconstruct them separately (" + p.string() + ")");
    }
    geo = g;
    Sinogram s = load_sinogram(p);
    s.check_matches(g.array);
    if (static_cast<int>(s.num_samples()) != g.num_samples) {
      throw InvalidInput(p.string() + ": sample count does not match the geometry");
    }
    sinos.push_back(std::move(s));
  }

  std::optional<nn::Model> model;
  if (o.method == "net") model = load_model(o.model, geo->grid.side_px, false);
  std::optional<SparseOperator> op;
  if (o.method == "mb") {
    if (!o.operator_path.empty()) {
      op = load_operator(o.operator_path);
      if (!op->provenance() || geometry_key(*op->provenance()) != geometry_key(*geo)) {
        throw InvalidInput("operator file was built for a different geometry");
      }
    } else {
      op = build_forward_operator(*geo);
    }
  }

  fs::create_directories(o.out);
  KeyValueMap kv;
  kv.set("method", o.method);
  kv.set("count", static_cast<long long>(inputs.size()));
  std::ostringstream table;
  table << "method " << o.method << ", " << inputs.size() << " scan(s)\n";
  const SpeedOfSound sos(geo->sos_m_per_s);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::string name = inputs[i].filename().string();
    const fs::path dest = fs::path(o.out) / name;
    if (o.method == "das") {
      save_image(dest, das_reconstruct(sinos[i], geo->array, geo->grid, sos, das_cfg), "das");
    } else if (o.method == "net") {
      const Image das = das_reconstruct(sinos[i], geo->array, geo->grid, sos, das_cfg);
      save_image(dest, model->infer(das), "net");
    } else {
      const MbResult r = mb_reconstruct(sinos[i], *op, mb_cfg);
      save_image(dest, r.image, "mb");
      const double rel = r.residual_history.back() / r.residual_history.front();
      kv.set("scan." + name + ".iterations", static_cast<long long>(r.iterations));
      kv.set("scan." + name + ".stop_reason", r.stop_reason);
      kv.set("scan." + name + ".relative_residual", rel);
      table << "  " << name << ": " << r.iterations << " iterations, " << r.stop_reason << ", R " << rel << "\n";
    }
  }
  emit_report(out, o.out, "reconstruct", table.str(), kv);
  return 0;
}

// ---------------------------------------------------------------- analyze

int cmd_analyze(const Options& o, std::ostream& out) {
  KeyValueMap kv;
  std::ostringstream table;
  const bool unet = o.model.arch == "deepmb-unet";
  const bool full = o.model.arch == "full";
  int fit_status = 0;

  auto report_fit = [&](const FitResult& fit, std::uint64_t target) {
    kv.set("fit.target_params", std::to_string(target));
    kv.set("fit.tolerance", o.tol);
    kv.set("fit.fitted", fit.fitted ? "true" : "false");
    if (fit.fitted) {
      kv.set("fit.width_multiplier", fit.width_multiplier);
      kv.set("fit.achieved_params", std::to_string(fit.achieved_params));
      table << "fit: width multiplier " << fit.width_multiplier << " gives " << fit.achieved_params
            << " parameters (target " << target << ")\n";
      return;
    }
    table << "fit: no multiplier within tolerance of " << target << " parameters\n";
    if (fit.nearest_below) {
      kv.set("fit.nearest_below.width_multiplier", fit.nearest_below->width_multiplier);
      kv.set("fit.nearest_below.params", std::to_string(fit.nearest_below->params));
      table << "  nearest below: " << fit.nearest_below->params << " at " << fit.nearest_below->width_multiplier
            << "\n";
    }
    if (fit.nearest_above) {
      kv.set("fit.nearest_above.width_multiplier", fit.nearest_above->width_multiplier);
      kv.set("fit.nearest_above.params", std::to_string(fit.nearest_above->params));
      table << "  nearest above: " << fit.nearest_above->params << " at " << fit.nearest_above->width_multiplier
            << "\n";
    }
    fit_status = 1;
  };

  CostReport report;
  std::string title;
  int side = 0;
  if (unet) {
    side = o.input_size > 0 ? o.input_size : 416;
    UNetConfig cfg;
    if (o.fit_params > 0) {
      const FitResult fit = fit_width_multiplier(cfg, side, side, o.fit_params, o.tol);
      report_fit(fit, o.fit_params);
      if (fit.fitted) cfg.width_multiplier = fit.width_multiplier;
    } else if (o.model.width > 0.0) {
      cfg.width_multiplier = o.model.width;
    } else {
      cfg = deepmb_unet_preset();
    }
    report = unet_cost(cfg, side, side);
    kv.set("arch", cfg.name);
    kv.set("width_multiplier", cfg.width_multiplier);
    title = cfg.name + " at " + std::to_string(side) + "x" + std::to_string(side) + ", width " +
            format_double(cfg.width_multiplier);
  } else {
    ModelOptions m = o.model;
    if (full) m.arch = "default";
    side = o.input_size > 0 ? o.input_size : (full ? 416 : 0);
    nn::ArchConfig arch = resolve_arch(m, side > 0 ? side : 64);
    if (side == 0) side = arch.input_size;
    if (o.fit_params > 0 || full) {
      const std::uint64_t target = o.fit_params > 0 ? o.fit_params : 17'400'000;
      const FitResult fit = fit_width_multiplier(arch, side, side, target, o.tol);
      report_fit(fit, target);
      if (fit.fitted) arch.width_multiplier = fit.width_multiplier;
    }
    report = network_cost(arch, side, side);
    kv.set("arch", arch.name);
    kv.set("width_multiplier", arch.width_multiplier);
    title = arch.name + " at " + std::to_string(side) + "x" + std::to_string(side) + ", width " +
            format_double(arch.width_multiplier);
  }
  kv.set("input_size", static_cast<long long>(side));
  kv.set("convention", std::string("flops = 2 macs for conv/linear; element-wise 1 flop per element"));
  put_cost(kv, "network.", report, o.per_layer);

  std::string text = table.str();
  if (o.per_layer) {
    text += format_cost_table(report, title);
  } else {
    char line[200];
    std::snprintf(line, sizeof line, "%s\n  FLOPs %.4g  MACs %.4g  params %llu\n", title.c_str(),
                  static_cast<double>(report.totals.flops), static_cast<double>(report.totals.macs),
                  static_cast<unsigned long long>(report.totals.params));
    text += line;
  }
  if (o.with_das) {
    const ScanGeometry geo = resolve_geometry(o.geometry, std::nullopt);
    const CostReport das = das_cost(geo.grid.num_pixels(), static_cast<std::uint64_t>(geo.array.num_elements));
    put_cost(kv, "das.", das, false);
    char line[200];
    std::snprintf(line, sizeof line, "delay-and-sum (%dx%d, %d elements, not in network totals)\n  FLOPs %.4g  MACs %.4g\n",
                  geo.grid.side_px, geo.grid.side_px, geo.array.num_elements, static_cast<double>(das.totals.flops),
                  static_cast<double>(das.totals.macs));
    text += line;
  }
  emit_report(out, o.out, "analyze", text, kv);
  return fit_status;
}

// ---------------------------------------------------------------- evaluate

int cmd_evaluate(const Options& o, std::ostream& out) {
  const std::vector<fs::path> preds = list_arrays(o.pred_dir);
  std::vector<std::pair<Image, Image>> pairs;
  std::vector<std::optional<fs::path>> sinos;
  for (const fs::path& p : preds) {
    const fs::path ref = fs::path(o.ref_dir) / p.filename();
    if (!fs::exists(ref)) throw InvalidInput("no reference for " + p.filename().string() + " in " + o.ref_dir);
    pairs.emplace_back(load_image(p), load_image(ref));
    if (!o.sino_dir.empty()) {
      const fs::path s = fs::path(o.sino_dir) / p.filename();
      if (!fs::exists(s)) throw InvalidInput("no sinogram for " + p.filename().string() + " in " + o.sino_dir);
      sinos.emplace_back(s);
    } else {
      sinos.emplace_back(std::nullopt);
    }
  }
  std::optional<SparseOperator> op;
  if (!o.operator_path.empty()) op = load_operator(o.operator_path);

  KeyValueMap kv;
  std::vector<ImageMetrics> all;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    ImageMetrics m = image_metrics(pairs[i].first, pairs[i].second);
    if (sinos[i]) {
      const ScanGeometry g = resolve_geometry(o.geometry, sinogram_geometry(*sinos[i]));
      if (!op) {
        op = build_forward_operator(g);
      } else if (op->provenance() && geometry_key(*op->provenance()) != geometry_key(g)) {
        if (!o.operator_path.empty()) throw InvalidInput("operator geometry differs from " + sinos[i]->string());
        op = build_forward_operator(g);
      }
      m.r = residual_norm(pairs[i].first, load_sinogram(*sinos[i]), *op);
    }
    const std::string prefix = "image." + preds[i].filename().string() + ".";
    if (m.r) kv.set(prefix + "r", *m.r);
    kv.set(prefix + "mae", m.mae);
    kv.set(prefix + "mse", m.mse);
    kv.set(prefix + "psnr_db", m.psnr_db);
    kv.set(prefix + "ssim", m.ssim);
    all.push_back(m);
  }
  const MetricsReport report = aggregate(all);
  KeyValueMap summary;
  summary.set("pred_dir", o.pred_dir);
  summary.set("ref_dir", o.ref_dir);
  summary.set("definitions",
              std::string("R=||Ax-s||/||s||; PSNR peak=max(ref); SSIM 11x11 gaussian sigma 1.5, L=range(ref), "
                          "valid windows; percentiles linear"));
  put_metrics(summary, report);
  for (const auto& [k, v] : kv.entries()) summary.set(k, v);
  emit_report(out, o.out, "metrics", format_metrics_table(report, fs::path(o.pred_dir).filename().string()),
              summary);
  return 0;
}

// ---------------------------------------------------------------- bench

int cmd_bench(const Options& o, std::ostream& out) {
  std::optional<ScanGeometry> base;
  if (!o.input.empty()) base = sinogram_geometry(o.input);
  const ScanGeometry geo = resolve_geometry(o.geometry, base);
  if (o.runs < 1) throw InvalidInput("--runs must be at least 1");
  if (o.warmup < 0) throw InvalidInput("--warmup must be non-negative");
  if (!(o.threshold_hz > 0.0)) throw InvalidInput("--threshold-hz must be positive");
  MbConfig mb_cfg{o.max_iters, parse_bool(o.nonneg, "--nonneg"), o.stop_tol};
  mb_cfg.validate();

  std::optional<nn::Model> model;
  if (o.method == "net" || o.method == "e2e") model = load_model(o.model, geo.grid.side_px, true);

  std::optional<SparseOperator> op;
  std::optional<Sinogram> sino;
  if (!o.input.empty()) {
    sino = load_sinogram(o.input);
  } else {
    op = build_forward_operator(geo);
    sino = apply_forward(*op, disk_phantom(geo.grid, 5, o.seed));
  }
  sino->check_matches(geo.array);

  TimingStats stats;
  if (o.method == "mb") {
    if (!op) op = build_forward_operator(geo);
    stats = benchmark([&] { mb_reconstruct(*sino, *op, mb_cfg); }, o.warmup, o.runs, o.threshold_hz);
  } else {
    const Stage stage = o.method == "das" ? Stage::das : o.method == "net" ? Stage::net : Stage::e2e;
    const ScanFixture fixture{*sino, geo.array, geo.grid, geo.sos_m_per_s};
    stats = bench_pipeline(fixture, model ? &*model : nullptr, {stage}, o.warmup, o.runs, o.threshold_hz)
                .front()
                .stats;
  }
  KeyValueMap kv;
  kv.set("method", o.method);
  kv.set("grid", static_cast<long long>(geo.grid.side_px));
  kv.set("warmup", static_cast<long long>(o.warmup));
  put_timing(kv, "", stats, true);
  emit_report(out, o.out, "bench", format_timing_table({{o.method, stats}}), kv);
  return 0;
}

// ---------------------------------------------------------------- config

/// Splices `key = value` entries from --config in front of the subcommand's
/// own arguments so explicit flags (parsed later, last one wins) take priority.
std::vector<std::string> apply_config(const std::vector<std::string>& args, CLI::App& app) {
  std::vector<std::string> rest;
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw InvalidInput("--config needs a file");
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (config_path.empty()) return rest;
  if (rest.empty()) throw InvalidInput("--config needs a subcommand");
  CLI::App* sub = app.get_subcommand_no_throw(rest.front());
  if (sub == nullptr) return rest;  // reported by the parser
  const KeyValueMap kv = KeyValueMap::load(config_path);
  std::vector<std::string> spliced{rest.front()};
  for (const auto& [key, value] : kv.entries()) {
    if (key == "config" || key == "help" || sub->get_option_no_throw("--" + key) == nullptr) {
      throw InvalidInput(config_path + ": unknown key '" + key + "' for " + rest.front());
    }
    spliced.push_back("--" + key + "=" + value);
  }
  spliced.insert(spliced.end(), rest.begin() + 1, rest.end());
  return spliced;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Optoacoustic reconstruction toolkit", "oareco"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");
  app.add_option("--config", "key = value file with defaults for the subcommand's flags");

  auto* sim = app.add_subcommand("simulate", "Simulate sinograms from phantoms");
  sim->add_option("--phantom", o.phantom, "points, disks, image:<file.pgm> or image:<directory>");
  sim->add_option("--count", o.count, "Number of points or disks")->check(CLI::PositiveNumber);
  sim->add_option("--num", o.num, "Number of scans")->check(CLI::PositiveNumber);
  sim->add_option("--noise-std", o.noise_std, "Gaussian noise standard deviation")->check(CLI::NonNegativeNumber);
  sim->add_option("--seed", o.seed, "Random seed");
  sim->add_flag("--save-operator", o.save_operator, "Also write the forward operator");
  sim->add_option("--out", o.out, "Output directory")->required();
  add_geometry_options(sim, o);

  auto* rec = app.add_subcommand("reconstruct", "Reconstruct images from sinograms");
  rec->add_option("--method", o.method, "das, mb or net")->required()->check(CLI::IsMember({"das", "mb", "net"}));
  rec->add_option("--input", o.input, "Sinogram file or directory")->required();
  rec->add_option("--out", o.out, "Output directory")->required();
  rec->add_option("--interp", o.interp, "DAS interpolation")->check(CLI::IsMember({"linear", "nearest"}));
  rec->add_option("--max-iters", o.max_iters, "Model-based iteration cap");
  rec->add_option("--nonneg", o.nonneg, "Model-based nonnegativity (true/false)");
  rec->add_option("--stop-tol", o.stop_tol, "Model-based relative residual change tolerance");
  rec->add_option("--operator", o.operator_path, "Precomputed forward operator");
  rec->add_option("--seed", o.seed, "Unused; accepted for uniform configs");
  add_geometry_options(rec, o);
  add_model_options(rec, o);

  auto* ana = app.add_subcommand("analyze", "FLOPs, MACs and parameter counts");
  ana->add_option("--arch", o.model.arch, "default, full, deepmb-unet or an architecture sidecar file");
  ana->add_option("--width", o.model.width, "Width multiplier override")->check(CLI::PositiveNumber);
  ana->add_option("--input-size", o.input_size, "Square input side")->check(CLI::PositiveNumber);
  ana->add_option("--fit-params", o.fit_params, "Fit the width multiplier to this parameter count");
  ana->add_option("--tol", o.tol, "Relative tolerance of the fit");
  ana->add_flag("--per-layer", o.per_layer, "List every sub-operation");
  ana->add_flag("--with-das", o.with_das, "Also report delay-and-sum cost for the geometry");
  ana->add_option("--out", o.out, "Output directory for analyze.txt / analyze.kv");
  ana->add_option("--seed", o.seed, "Unused; accepted for uniform configs");
  add_geometry_options(ana, o);

  auto* eva = app.add_subcommand("evaluate", "Image-quality metrics against references");
  eva->add_option("--pred-dir", o.pred_dir, "Predicted images")->required();
  eva->add_option("--ref-dir", o.ref_dir, "Reference images with matching file names")->required();
  eva->add_option("--sino-dir", o.sino_dir, "Sinograms with matching file names, for the residual norm");
  eva->add_option("--operator", o.operator_path, "Precomputed forward operator");
  eva->add_option("--out", o.out, "Output directory for metrics.txt / metrics.kv");
  eva->add_option("--seed", o.seed, "Unused; accepted for uniform configs");
  add_geometry_options(eva, o);

  auto* ben = app.add_subcommand("bench", "Latency and frame rate");
  ben->add_option("--method", o.method, "das, mb, net or e2e")
      ->required()
      ->check(CLI::IsMember({"das", "mb", "net", "e2e"}));
  ben->add_option("--runs", o.runs, "Measured runs");
  ben->add_option("--warmup", o.warmup, "Discarded warmup runs");
  ben->add_option("--threshold-hz", o.threshold_hz, "Realtime threshold");
  ben->add_option("--input", o.input, "Sinogram file (default: simulated disks)");
  ben->add_option("--max-iters", o.max_iters, "Model-based iteration cap");
  ben->add_option("--nonneg", o.nonneg, "Model-based nonnegativity (true/false)");
  ben->add_option("--stop-tol", o.stop_tol, "Model-based relative residual change tolerance");
  ben->add_option("--seed", o.seed, "Phantom seed for the simulated input");
  ben->add_option("--out", o.out, "Output directory for bench.txt / bench.kv");
  add_geometry_options(ben, o);
  add_model_options(ben, o);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = apply_config(args, app);
    std::reverse(args.begin(), args.end());
    try {
      app.parse(args);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
      err << "error: " << e.what() << "\n\n" << app.help();
      return 1;
    }
    if (sim->parsed()) return cmd_simulate(o, out);
    if (rec->parsed()) return cmd_reconstruct(o, out);
    if (ana->parsed()) return cmd_analyze(o, out);
    if (eva->parsed()) return cmd_evaluate(o, out);
    if (ben->parsed()) return cmd_bench(o, out);
    err << app.help();
    return 1;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const InvalidInput& e) {
    err << "invalid input: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "file error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace oareco::cli
