#include "oareco/oarr.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>

#include "oareco/error.hpp"

namespace oareco {

static_assert(std::endian::native == std::endian::little, "OARR1 I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'O', 'A', 'R', 'R'};
constexpr std::uint8_t kVersion = 0x01;

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

  template <typename T>
  void put(T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    out_.insert(out_.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }

 private:
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  bool done() const { return pos_ == in_.size(); }

  template <typename T>
  T get() {
    T value;
    std::memcpy(&value, take(sizeof(T)), sizeof(T));
    return value;
  }
  const std::uint8_t* take(std::size_t n) {
    if (in_.size() - pos_ < n) throw InvalidInput("OARR1 stream truncated");
    const auto* p = in_.data() + pos_;
    pos_ += n;
    return p;
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::f32: return 4;
    case DType::f64: return 8;
    case DType::bytes: return 1;
  }
  throw InvalidInput("unknown OARR1 dtype code");
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InvalidInput("write failed for " + path.string());
}

ArrayRecord matrix_record(const std::string& name, const Matrix& m) {
  ArrayRecord rec;
  rec.name = name;
  rec.dtype = DType::f64;
  rec.dims = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
  rec.values.assign(m.values().begin(), m.values().end());
  return rec;
}

Matrix record_matrix(const ArrayRecord& rec) {
  if (rec.dims.size() != 2 || rec.dtype == DType::bytes) {
    throw InvalidInput("array '" + rec.name + "' is not a rank-2 numeric array");
  }
  return Matrix(rec.dims[0], rec.dims[1], rec.values);
}

}  // namespace

std::size_t ArrayRecord::element_count() const {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         [](std::size_t a, std::uint32_t b) { return a * b; });
}

std::vector<std::uint8_t> encode_records(std::span<const ArrayRecord> records) {
  std::vector<std::uint8_t> out;
  Writer w(out);
  w.put_bytes(kMagic, sizeof(kMagic));
  w.put(kVersion);
  for (const ArrayRecord& rec : records) {
    if (rec.name.size() > 0xFFFF) throw InvalidInput("array name too long: " + rec.name.substr(0, 32));
    if (rec.dims.size() > 0xFF) throw InvalidInput("array rank above 255: " + rec.name);
    const std::size_t n = rec.element_count();
    const std::size_t stored = rec.dtype == DType::bytes ? rec.bytes.size() : rec.values.size();
    if (stored != n) throw InvalidInput("array '" + rec.name + "' data length does not match dims");
    w.put(static_cast<std::uint16_t>(rec.name.size()));
    w.put_bytes(rec.name.data(), rec.name.size());
    w.put(static_cast<std::uint8_t>(rec.dtype));
    w.put(static_cast<std::uint8_t>(rec.dims.size()));
    for (std::uint32_t d : rec.dims) w.put(d);
    switch (rec.dtype) {
      case DType::f32:
        for (double v : rec.values) w.put(static_cast<float>(v));
        break;
      case DType::f64:
        for (double v : rec.values) w.put(v);
        break;
      case DType::bytes:
        w.put_bytes(rec.bytes.data(), rec.bytes.size());
        break;
    }
  }
  return out;
}

std::vector<ArrayRecord> decode_records(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (std::memcmp(r.take(4), kMagic, 4) != 0) throw InvalidInput("not an OARR1 stream (bad magic)");
  if (const auto version = r.get<std::uint8_t>(); version != kVersion) {
    throw InvalidInput("unsupported OARR version " + std::to_string(version));
  }
  std::vector<ArrayRecord> records;
  while (!r.done()) {
    ArrayRecord rec;
    const auto name_len = r.get<std::uint16_t>();
    const auto* name = r.take(name_len);
    rec.name.assign(reinterpret_cast<const char*>(name), name_len);
    const auto code = r.get<std::uint8_t>();
    if (code > 2) throw InvalidInput("array '" + rec.name + "' has unknown dtype code " + std::to_string(code));
    rec.dtype = static_cast<DType>(code);
    const auto rank = r.get<std::uint8_t>();
    for (int i = 0; i < rank; ++i) rec.dims.push_back(r.get<std::uint32_t>());
    const std::size_t n = rec.element_count();
    const auto* data = r.take(n * dtype_size(rec.dtype));
    switch (rec.dtype) {
      case DType::f32:
        rec.values.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
          float f;
          std::memcpy(&f, data + 4 * i, 4);
          rec.values[i] = f;
        }
        break;
      case DType::f64:
        rec.values.resize(n);
        std::memcpy(rec.values.data(), data, 8 * n);
        break;
      case DType::bytes:
        rec.bytes.assign(reinterpret_cast<const char*>(data), n);
        break;
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void write_array(const std::filesystem::path& path, const ArrayRecord& record) {
  write_file(path, encode_records(std::span(&record, 1)));
}

ArrayRecord read_array(const std::filesystem::path& path) {
  auto records = decode_records(read_file(path));
  if (records.size() != 1) {
    throw InvalidInput(path.string() + ": expected a single array, found " + std::to_string(records.size()));
  }
  return std::move(records.front());
}

void write_archive(const std::filesystem::path& path, std::span<const ArrayRecord> records) {
  std::vector<ArrayRecord> all;
  all.reserve(records.size() + 1);
  ArrayRecord manifest;
  manifest.name = kManifestRecord;
  manifest.dtype = DType::bytes;
  for (const ArrayRecord& rec : records) manifest.bytes += rec.name + "\n";
  manifest.dims = {static_cast<std::uint32_t>(manifest.bytes.size())};
  all.push_back(std::move(manifest));
  all.insert(all.end(), records.begin(), records.end());
  write_file(path, encode_records(all));
}

std::vector<ArrayRecord> read_archive(const std::filesystem::path& path) {
  auto records = decode_records(read_file(path));
  if (records.empty() || records.front().name != kManifestRecord || records.front().dtype != DType::bytes) {
    throw InvalidInput(path.string() + ": archive does not start with a manifest");
  }
  std::vector<std::string> listed;
  {
    const std::string& text = records.front().bytes;
    std::size_t start = 0;
    while (start < text.size()) {
      const auto nl = text.find('\n', start);
      const auto end = nl == std::string::npos ? text.size() : nl;
      listed.push_back(text.substr(start, end - start));
      start = end + 1;
    }
  }
  records.erase(records.begin());
  for (std::size_t i = 0; i < std::max(listed.size(), records.size()); ++i) {
    if (i >= records.size()) throw ManifestError(listed[i], "listed in the manifest but missing from the file");
    if (i >= listed.size()) throw ManifestError(records[i].name, "present in the file but not in the manifest");
    if (listed[i] != records[i].name) {
      throw ManifestError(listed[i], "manifest order disagrees with file (found '" + records[i].name + "')");
    }
  }
  return records;
}

std::filesystem::path metadata_path(const std::filesystem::path& array_path) {
  return array_path.string() + ".meta";
}

void put_geometry(KeyValueMap& meta, const ScanGeometry& g) {
  meta.set("num_elements", static_cast<long long>(g.array.num_elements));
  meta.set("radius_m", g.array.radius_m);
  meta.set("coverage_rad", g.array.coverage_rad);
  meta.set("center_x_m", g.array.center_xy_m.x);
  meta.set("center_y_m", g.array.center_xy_m.y);
  meta.set("rotation_rad", g.array.rotation_rad);
  meta.set("side_px", static_cast<long long>(g.grid.side_px));
  meta.set("pixel_size_m", g.grid.pixel_size_m);
  meta.set("origin_x_m", g.grid.origin_xy_m.x);
  meta.set("origin_y_m", g.grid.origin_xy_m.y);
  meta.set("sampling_rate_hz", g.sampling_rate_hz);
  meta.set("t0_s", g.t0_s);
  meta.set("num_samples", static_cast<long long>(g.num_samples));
  meta.set("sos_m_per_s", g.sos_m_per_s);
}

ScanGeometry get_geometry(const KeyValueMap& meta) {
  ScanGeometry g;
  g.array.num_elements = static_cast<int>(meta.get_int("num_elements"));
  g.array.radius_m = meta.get_double("radius_m");
  g.array.coverage_rad = meta.get_double("coverage_rad");
  g.array.center_xy_m = {meta.get_double("center_x_m"), meta.get_double("center_y_m")};
  g.array.rotation_rad = meta.get_double("rotation_rad");
  g.grid.side_px = static_cast<int>(meta.get_int("side_px"));
  g.grid.pixel_size_m = meta.get_double("pixel_size_m");
  g.grid.origin_xy_m = {meta.get_double("origin_x_m"), meta.get_double("origin_y_m")};
  g.sampling_rate_hz = meta.get_double("sampling_rate_hz");
  g.t0_s = meta.get_double("t0_s");
  g.num_samples = static_cast<int>(meta.get_int("num_samples"));
  g.sos_m_per_s = meta.get_double("sos_m_per_s");
  g.validate();
  return g;
}

void save_sinogram(const std::filesystem::path& path, const Sinogram& sino,
                   const std::optional<ScanGeometry>& geometry) {
  write_array(path, matrix_record("sinogram", sino.data()));
  KeyValueMap meta;
  meta.set("kind", std::string("sinogram"));
  meta.set("units", std::string("rows=detector columns=time sample; seconds, hertz, meters"));
  if (geometry) put_geometry(meta, *geometry);
  meta.set("sampling_rate_hz", sino.sampling_rate_hz());
  meta.set("t0_s", sino.t0_s());
  if (sino.wavelength_nm()) meta.set("wavelength_nm", *sino.wavelength_nm());
  meta.save(metadata_path(path));
}

Sinogram load_sinogram(const std::filesystem::path& path) {
  const ArrayRecord rec = read_array(path);
  const KeyValueMap meta = KeyValueMap::load(metadata_path(path));
  std::optional<double> wavelength;
  if (meta.contains("wavelength_nm")) wavelength = meta.get_double("wavelength_nm");
  return Sinogram(record_matrix(rec), meta.get_double("sampling_rate_hz"), meta.get_double("t0_s"), wavelength);
}

void save_image(const std::filesystem::path& path, const Image& image, const std::string& name) {
  write_array(path, matrix_record(name, image.data()));
  KeyValueMap meta;
  meta.set("kind", std::string("image"));
  meta.set("units", std::string("row 0 at minimum y; meters"));
  meta.set("side_px", static_cast<long long>(image.grid().side_px));
  meta.set("pixel_size_m", image.grid().pixel_size_m);
  meta.set("origin_x_m", image.grid().origin_xy_m.x);
  meta.set("origin_y_m", image.grid().origin_xy_m.y);
  meta.save(metadata_path(path));
}

Image load_image(const std::filesystem::path& path) {
  const ArrayRecord rec = read_array(path);
  const KeyValueMap meta = KeyValueMap::load(metadata_path(path));
  ImageGrid grid{static_cast<int>(meta.get_int("side_px")), meta.get_double("pixel_size_m"),
                 {meta.get_double("origin_x_m"), meta.get_double("origin_y_m")}};
  return Image(record_matrix(rec), grid);
}

}  // namespace oareco
