#include <doctest.h>

#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "oareco/cli.hpp"
#include "oareco/keyvalue.hpp"
#include "oareco/oarr.hpp"

using namespace oareco;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result call(std::vector<std::string> args) {
  args.insert(args.begin(), "oareco");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("simulate is reproducible") {
  testutil::TempDir a, b;
  for (const auto* dir : {&a, &b}) {
    const Result r = call({"simulate", "--phantom", "disks", "--num", "2", "--noise-std", "0.01", "--seed", "7",
                           "--grid", "32", "--pixel-size", "5e-4", "--out", dir->path().string()});
    REQUIRE(r.code == 0);
  }
  for (const char* f : {"sinograms/0000.oarr", "sinograms/0001.oarr", "phantoms/0001.oarr", "geometry.meta"}) {
    INFO(f);
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
}

TEST_CASE("simulate, reconstruct and evaluate") {
  testutil::TempDir d;
  const std::string root = d.path().string();
  REQUIRE(call({"simulate", "--phantom", "disks", "--num", "2", "--grid", "32", "--pixel-size", "5e-4", "--out",
                root + "/sim", "--save-operator"})
              .code == 0);
  const Result mb = call({"reconstruct", "--method", "mb", "--input", root + "/sim/sinograms", "--out", root + "/mb",
                          "--operator", root + "/sim/operator.oarr", "--max-iters", "60"});
  REQUIRE(mb.code == 0);
  CHECK(fs::exists(d / "mb/0000.oarr"));
  const KeyValueMap rec = KeyValueMap::load(d / "mb/reconstruct.kv");
  CHECK(rec.get_double("scan.0000.oarr.relative_residual") <= 0.05);

  REQUIRE(call({"reconstruct", "--method", "das", "--input", root + "/sim/sinograms", "--out", root + "/das"}).code == 0);
  REQUIRE(call({"reconstruct", "--method", "net", "--input", root + "/sim/sinograms/0000.oarr", "--out",
                root + "/net", "--random-weights", "3"})
              .code == 0);
  CHECK(load_image(d / "net/0000.oarr").grid().side_px == 32);

  const Result ev = call({"evaluate", "--pred-dir", root + "/mb", "--ref-dir", root + "/sim/phantoms", "--sino-dir",
                          root + "/sim/sinograms", "--out", root + "/eval"});
  REQUIRE(ev.code == 0);
  const KeyValueMap m = KeyValueMap::load(d / "eval/metrics.kv");
  CHECK(m.get_int("count") == 2);
  CHECK(m.get_double("r.mean") <= 0.05);
  CHECK(m.contains("ssim.p75"));
}

TEST_CASE("analyze reports counts and fits") {
  const Result r = call({"analyze", "--arch", "default", "--input-size", "64"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("network.params = 1269633") != std::string::npos);

  testutil::TempDir d;
  REQUIRE(call({"analyze", "--arch", "default", "--input-size", "64", "--fit-params", "1269633", "--tol", "0.001",
                "--out", d.path().string()})
              .code == 0);
  const KeyValueMap kv = KeyValueMap::load(d / "analyze.kv");
  CHECK(kv.get("fit.fitted") == "true");
  CHECK(kv.get_double("fit.width_multiplier") == 1.0);

  const Result none = call({"analyze", "--input-size", "64", "--fit-params", "100", "--tol", "0.01"});
  CHECK(none.code == 1);
  CHECK(none.out.find("nearest above") != std::string::npos);
}

TEST_CASE("config file values yield to explicit flags") {
  testutil::TempDir d;
  {
    std::ofstream cfg(d / "run.cfg");
    cfg << "input-size = 32\nper-layer = true\n";
  }
  const Result from_cfg = call({"analyze", "--config", (d / "run.cfg").string()});
  REQUIRE(from_cfg.code == 0);
  CHECK(from_cfg.out.find("input_size = 32") != std::string::npos);
  CHECK(from_cfg.out.find("network.layer.") != std::string::npos);
  const Result flag = call({"analyze", "--config", (d / "run.cfg").string(), "--input-size", "64"});
  REQUIRE(flag.code == 0);
  CHECK(flag.out.find("input_size = 64") != std::string::npos);

  {
    std::ofstream cfg(d / "bad.cfg");
    cfg << "colour = blue\n";
  }
  const Result bad = call({"analyze", "--config", (d / "bad.cfg").string()});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("colour") != std::string::npos);
}

TEST_CASE("exit codes") {
  CHECK(call({"frobnicate"}).code == 1);
  CHECK(call({}).code == 1);
  CHECK(call({"--help"}).code == 0);
  CHECK(call({"reconstruct", "--method", "das", "--input", "/nonexistent/x.oarr", "--out", "/tmp/x"}).code == 1);
  CHECK(call({"analyze", "--arch", "default", "--input-size", "40"}).code == 1);

  // Values this large overflow the solver and surface as a numerical failure.
  testutil::TempDir d;
  ScanGeometry g = desk_scale_geometry();
  g.grid.side_px = 16;
  g.grid.pixel_size_m = 1e-3;
  std::vector<double> v(64 * 512, 1e300);
  save_sinogram(d / "huge.oarr", Sinogram(Matrix(64, 512, v), g.sampling_rate_hz), g);
  const Result r = call({"reconstruct", "--method", "mb", "--input", (d / "huge.oarr").string(), "--out",
                         (d / "out").string()});
  CHECK(r.code == 2);
}
