#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xferlab/model/head.hpp"
#include "xferlab/model/parameters.hpp"
#include "xferlab/util/binio.hpp"

// "SEVX" container, little-endian throughout:
//
//   magic        4 bytes  "SEVX"
//   version      u32
//   count        u64      number of records
//   per record:  name_len u64, name bytes (UTF-8), rank u64, dims u64 x rank,
//                values f64 x prod(dims)
//   checksum     u64      FNV-1a 64 of every preceding byte
//
// Parameter records come first in canonical (sorted) order. A head matrix
// uses the reserved names "~head/weight" (K x C) and "~head/class/<c>/<name>"
// (rank 0, value c); '~' sorts after every parameter name.
namespace xferlab::model {

inline constexpr std::string_view kCheckpointMagic = "SEVX";
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::string_view kHeadPrefix = "~head/";

struct TensorRecord {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

inline std::string encode_records(std::string_view magic, const std::vector<TensorRecord>& records) {
  BinaryWriter w;
  w.raw(magic);
  w.u32(kCheckpointVersion);
  w.u64(records.size());
  for (const auto& r : records) {
    w.str(r.name);
    w.u64(r.shape.size());
    for (auto d : r.shape) w.u64(d);
    w.doubles(r.values);
  }
  w.seal();
  return w.bytes();
}

inline std::vector<TensorRecord> decode_records(std::string_view magic, std::string_view bytes,
                                                const std::string& context) {
  auto payload = verify_sealed(bytes, context);
  BinaryReader r(payload, context);
  if (r.raw(4) != magic) throw FormatError(context + ": bad magic, expected " + std::string(magic));
  auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError(context + ": unsupported version " + std::to_string(version));
  }
  auto count = r.u64();
  std::vector<TensorRecord> out;
  for (std::uint64_t i = 0; i < count; ++i) {
    TensorRecord rec;
    rec.name = r.str();
    auto rank = r.u64();
    if (rank > 8) throw FormatError(context + ": record '" + rec.name + "' has rank " + std::to_string(rank));
    std::size_t n = 1;
    for (std::uint64_t k = 0; k < rank; ++k) {
      auto d = r.u64();
      if (d == 0 || d > (std::uint64_t(1) << 32)) throw FormatError(context + ": bad dimension in '" + rec.name + "'");
      rec.shape.push_back(d);
      n *= d;
    }
    if (n * 8 > r.remaining()) throw FormatError(context + ": truncated values in '" + rec.name + "'");
    rec.values = r.doubles(n);
    out.push_back(std::move(rec));
  }
  if (r.remaining() != 0) throw FormatError(context + ": trailing bytes after records");
  return out;
}

struct Checkpoint {
  ParameterVector params;
  std::optional<HeadMatrix> head;
};

inline std::string encode_checkpoint(const ParameterVector& theta, const HeadMatrix* head = nullptr) {
  std::vector<TensorRecord> records;
  auto values = theta.values();
  for (const auto& e : theta.layout().entries()) {
    auto s = values.subspan(e.offset, e.size);
    records.push_back({e.name, e.shape, {s.begin(), s.end()}});
  }
  if (head != nullptr) {
    records.push_back({std::string(kHeadPrefix) + "weight", {head->dim, head->num_classes()}, head->weights});
    for (std::size_t c = 0; c < head->num_classes(); ++c) {
      records.push_back({std::string(kHeadPrefix) + "class/" + std::to_string(c) + "/" + head->class_names[c],
                         {},
                         {static_cast<double>(c)}});
    }
  }
  return encode_records(kCheckpointMagic, records);
}

inline Checkpoint decode_checkpoint(std::string_view bytes, const std::string& context) {
  auto records = decode_records(kCheckpointMagic, bytes, context);
  std::vector<std::pair<std::string, Shape>> shapes;
  std::vector<double> values;
  std::optional<HeadMatrix> head;
  std::vector<std::pair<std::size_t, std::string>> classes;
  for (auto& rec : records) {
    if (rec.name.starts_with(kHeadPrefix)) {
      auto rest = rec.name.substr(kHeadPrefix.size());
      if (rest == "weight") {
        if (rec.shape.size() != 2) throw FormatError(context + ": head weight must be rank 2");
        head.emplace();
        head->dim = rec.shape[0];
        head->weights = std::move(rec.values);
        head->class_names.resize(rec.shape[1]);
      } else if (rest.starts_with("class/")) {
        auto tail = rest.substr(6);
        auto slash = tail.find('/');
        if (slash == std::string::npos) throw FormatError(context + ": malformed head class record");
        classes.emplace_back(std::stoul(tail.substr(0, slash)), tail.substr(slash + 1));
      } else {
        throw FormatError(context + ": unknown reserved record '" + rec.name + "'");
      }
      continue;
    }
    shapes.emplace_back(rec.name, rec.shape);
    values.insert(values.end(), rec.values.begin(), rec.values.end());
  }
  if (head) {
    if (classes.size() != head->class_names.size()) throw FormatError(context + ": head class count mismatch");
    for (auto& [c, name] : classes) {
      if (c >= head->class_names.size()) throw FormatError(context + ": head class index out of range");
      head->class_names[c] = name;
    }
  }
  auto layout = std::make_shared<const ParameterLayout>(ParameterLayout::from_shapes(shapes));
  return {ParameterVector(std::move(layout), std::move(values)), std::move(head)};
}

inline void save_checkpoint(const std::filesystem::path& path, const ParameterVector& theta,
                            const HeadMatrix* head = nullptr) {
  write_file(path, encode_checkpoint(theta, head));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path), path.string());
}

}  // namespace xferlab::model
