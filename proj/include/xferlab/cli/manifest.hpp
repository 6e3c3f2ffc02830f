#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "xferlab/util/binio.hpp"
#include "xferlab/util/hash.hpp"
#include "xferlab/util/structured_text.hpp"

namespace xferlab::cli {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kManifestName = "manifest.ini";

// Record of one produced file: where it lives (relative to the run
// directory), the fingerprint of its content, and the hash of everything
// that went into producing it.
struct ArtifactEntry {
  std::string path;
  std::uint64_t fingerprint = 0;
  std::uint64_t inputs = 0;
  std::string kind;
};

// The run manifest: artifact entries, the grid-point selection per pair and
// per-stage timings. Timings are the only non-deterministic content of a run
// and live nowhere else.
class RunManifest {
 public:
  explicit RunManifest(std::filesystem::path dir) : dir_(std::move(dir)) {}

  static RunManifest open(const std::filesystem::path& dir) {
    RunManifest m(dir);
    const auto path = dir / kManifestName;
    if (std::filesystem::exists(path)) m.st_ = StructuredText::parse(read_file(path), path.string());
    return m;
  }

  const std::filesystem::path& dir() const { return dir_; }

  void set_run(const std::string& key, std::string value) { st_.set("run", key, std::move(value)); }
  std::optional<std::string> run(const std::string& key) const { return st_.get("run", key); }

  std::optional<ArtifactEntry> artifact(const std::string& key) const {
    const auto sec = "artifact." + key;
    auto path = st_.get(sec, "path");
    if (!path) return std::nullopt;
    ArtifactEntry e;
    e.path = *path;
    e.fingerprint = parse_hex(st_.get(sec, "fingerprint").value_or(""), sec);
    e.inputs = parse_hex(st_.get(sec, "inputs").value_or(""), sec);
    e.kind = st_.get(sec, "kind").value_or("");
    return e;
  }

  void record(const std::string& key, const ArtifactEntry& e) {
    const auto sec = "artifact." + key;
    st_.set(sec, "path", e.path);
    st_.set(sec, "kind", e.kind);
    st_.set(sec, "fingerprint", hex64(e.fingerprint));
    st_.set(sec, "inputs", hex64(e.inputs));
    save();
  }

  void set(const std::string& section, const std::string& key, std::string value) {
    st_.set(section, key, std::move(value));
  }
  std::optional<std::string> get(const std::string& section, const std::string& key) const {
    return st_.get(section, key);
  }

  void add_timing(const std::string& stage, double seconds) {
    double prior = 0.0;
    if (auto v = st_.get("timing", stage)) prior = parse_double(*v, "timing");
    st_.set("timing", stage, format_double(prior + seconds));
    save();
  }

  void save() const { write_file(dir_ / kManifestName, st_.serialize()); }

  const StructuredText& text() const { return st_; }

 private:
  static std::uint64_t parse_hex(const std::string& s, const std::string& what) {
    if (s.empty()) throw FormatError("manifest " + what + ": missing hex value");
    std::uint64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v, 16);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw FormatError("manifest " + what + ": bad hex value '" + s + "'");
    }
    return v;
  }

  std::filesystem::path dir_;
  StructuredText st_;
};

}  // namespace xferlab::cli
