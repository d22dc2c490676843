#pragma once

// OARR1 array container.
//
// Layout (little-endian):
//   "OARR" | 0x01 | record+
//   record := u16 name_len | name (UTF-8) | u8 dtype | u8 rank | u32 dims[rank] | row-major data
//   dtype  := 0 binary32 | 1 binary64 | 2 raw bytes (manifest record only)
//
// A single-array file holds exactly one record. A multi-tensor archive starts
// with a "__manifest__" byte record listing the following record names, one
// per line, in file order.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oareco/domain.hpp"
#include "oareco/keyvalue.hpp"

namespace oareco {

enum class DType : std::uint8_t { f32 = 0, f64 = 1, bytes = 2 };

struct ArrayRecord {
  std::string name;
  DType dtype = DType::f64;
  std::vector<std::uint32_t> dims;
  std::vector<double> values;  // f32 records are widened exactly on read
  std::string bytes;           // only for DType::bytes

  std::size_t element_count() const;
};

inline constexpr const char* kManifestRecord = "__manifest__";

std::vector<std::uint8_t> encode_records(std::span<const ArrayRecord> records);
std::vector<ArrayRecord> decode_records(std::span<const std::uint8_t> bytes);

void write_array(const std::filesystem::path& path, const ArrayRecord& record);
ArrayRecord read_array(const std::filesystem::path& path);

/// Writes a manifest record followed by `records`.
void write_archive(const std::filesystem::path& path, std::span<const ArrayRecord> records);
/// Reads an archive; the manifest is checked against the records and stripped.
std::vector<ArrayRecord> read_archive(const std::filesystem::path& path);

/// Sidecar path for an array file: "<path>.meta".
std::filesystem::path metadata_path(const std::filesystem::path& array_path);

/// Geometry keys written next to sinograms and images.
void put_geometry(KeyValueMap& meta, const ScanGeometry& geometry);
ScanGeometry get_geometry(const KeyValueMap& meta);

void save_sinogram(const std::filesystem::path& path, const Sinogram& sino,
                   const std::optional<ScanGeometry>& geometry = std::nullopt);
Sinogram load_sinogram(const std::filesystem::path& path);

void save_image(const std::filesystem::path& path, const Image& image, const std::string& name = "image");
Image load_image(const std::filesystem::path& path);

}  // namespace oareco
