#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "gsuq/csv.hpp"
#include "gsuq/error.hpp"

namespace gsuq {

static_assert(std::endian::native == std::endian::little, "GSUQ I/O assumes a little-endian host");

/// Regular 3D grid. dx, dy in meters; dz in milliseconds two-way time.
struct Grid3 {
  std::uint32_t nx = 1, ny = 1, nz = 1;
  float dx = 1.f, dy = 1.f, dz = 1.f;

  std::size_t size() const { return std::size_t{nx} * ny * nz; }
  std::size_t traces() const { return std::size_t{nx} * ny; }

  // k fastest, then i, then j: a trace is contiguous.
  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const { return k + nz * (i + nx * j); }
  std::size_t trace_index(std::size_t i, std::size_t j) const { return i + nx * j; }

  bool contains(long long i, long long j, long long k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < nx && j < ny && k < nz;
  }

  void validate() const {
    if (nx == 0 || ny == 0 || nz == 0) throw FormatError("grid dimensions must be positive");
    if (!(dx > 0.f && dy > 0.f && dz > 0.f) || !std::isfinite(dx) || !std::isfinite(dy) || !std::isfinite(dz))
      throw FormatError("grid cell sizes must be positive and finite");
  }

  friend bool operator==(const Grid3&, const Grid3&) = default;
};

struct TraceId {
  std::size_t i = 0, j = 0;
};

class Volume {
 public:
  Volume() = default;
  explicit Volume(const Grid3& grid, float fill = 0.f) : grid_(grid), values_(grid.size(), fill) { grid.validate(); }
  Volume(const Grid3& grid, std::vector<float> values) : grid_(grid), values_(std::move(values)) {
    grid.validate();
    if (values_.size() != grid_.size()) throw DataError("volume payload does not match grid size");
  }

  const Grid3& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<const float> values() const { return values_; }
  std::span<float> values() { return values_; }

  float& operator[](std::size_t n) { return values_[n]; }
  float operator[](std::size_t n) const { return values_[n]; }
  float& at(std::size_t i, std::size_t j, std::size_t k) { return values_[grid_.index(i, j, k)]; }
  float at(std::size_t i, std::size_t j, std::size_t k) const { return values_[grid_.index(i, j, k)]; }

  std::span<const float> trace(std::size_t i, std::size_t j) const {
    return std::span<const float>(values_).subspan(grid_.index(i, j, 0), grid_.nz);
  }
  std::span<float> trace(std::size_t i, std::size_t j) {
    return std::span<float>(values_).subspan(grid_.index(i, j, 0), grid_.nz);
  }

  bool congruent(const Volume& other) const { return grid_ == other.grid_; }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](float v) { return std::isfinite(v); });
  }

  friend bool operator==(const Volume& a, const Volume& b) {
    return a.grid_ == b.grid_ &&
           std::memcmp(a.values_.data(), b.values_.data(), a.values_.size() * sizeof(float)) == 0;
  }

 private:
  Grid3 grid_{};
  std::vector<float> values_;
};

struct WellSample {
  std::uint32_t k = 0;
  float ip = 0.f;  // kPa.s/m
};

struct Well {
  std::string name;
  std::uint32_t i = 0, j = 0;
  std::vector<WellSample> samples;
};

struct WellSet {
  std::vector<Well> wells;

  std::size_t sample_count() const {
    std::size_t n = 0;
    for (const auto& w : wells) n += w.samples.size();
    return n;
  }

  const Well* find(const std::string& name) const {
    for (const auto& w : wells)
      if (w.name == name) return &w;
    return nullptr;
  }

  void validate(const Grid3& grid) const {
    std::set<std::string> names;
    for (const auto& w : wells) {
      if (!names.insert(w.name).second) throw DataError("duplicate well name " + w.name);
      std::set<std::uint32_t> ks;
      for (const auto& s : w.samples) {
        if (!grid.contains(w.i, w.j, s.k)) throw IndexError("well " + w.name + " sample outside grid");
        if (!ks.insert(s.k).second) throw DataError("well " + w.name + " has two samples at one layer");
        if (!(s.ip > 0.f) || !std::isfinite(s.ip)) throw DataError("well " + w.name + " has non-positive ip");
      }
    }
  }

  // Subset split by name: wells listed in `names` go to the first set.
  std::pair<WellSet, WellSet> partition(const std::set<std::string>& names) const {
    std::pair<WellSet, WellSet> out;
    for (const auto& w : wells) (names.count(w.name) ? out.first : out.second).wells.push_back(w);
    return out;
  }
};

// ---------------------------------------------------------------------------
// GSUQ binary volume format:
//   "GSUQ" | u16 version=1 | u32 nx, ny, nz | f32 dx, dy, dz | f32 payload
// all little-endian; payload k-fastest, then i, then j.

inline constexpr char kMagic[4] = {'G', 'S', 'U', 'Q'};
inline constexpr std::uint16_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 4 + 2 + 3 * 4 + 3 * 4;

inline std::vector<char> encode_volume(const Volume& v) {
  std::vector<char> buf(kHeaderBytes + v.size() * sizeof(float));
  char* p = buf.data();
  auto put = [&p](const auto& x) {
    std::memcpy(p, &x, sizeof x);
    p += sizeof x;
  };
  std::memcpy(p, kMagic, 4);
  p += 4;
  put(kFormatVersion);
  const Grid3& g = v.grid();
  put(g.nx);
  put(g.ny);
  put(g.nz);
  put(g.dx);
  put(g.dy);
  put(g.dz);
  std::memcpy(p, v.values().data(), v.size() * sizeof(float));
  return buf;
}

inline Volume decode_volume(std::span<const char> buf) {
  if (buf.size() < kHeaderBytes || std::memcmp(buf.data(), kMagic, 4) != 0)
    throw FormatError("not a GSUQ volume (bad magic or short header)");
  const char* p = buf.data() + 4;
  auto get = [&p](auto& x) {
    std::memcpy(&x, p, sizeof x);
    p += sizeof x;
  };
  std::uint16_t version = 0;
  get(version);
  if (version != kFormatVersion) throw FormatError("unsupported GSUQ version " + std::to_string(version));
  Grid3 g;
  get(g.nx);
  get(g.ny);
  get(g.nz);
  get(g.dx);
  get(g.dy);
  get(g.dz);
  g.validate();
  const std::size_t payload = buf.size() - kHeaderBytes;
  if (payload != g.size() * sizeof(float))
    throw TruncationError("GSUQ payload is " + std::to_string(payload) + " bytes, header declares " +
                          std::to_string(g.size() * sizeof(float)));
  std::vector<float> values(g.size());
  std::memcpy(values.data(), p, payload);
  Volume v(g, std::move(values));
  if (!v.all_finite()) throw DataError("GSUQ payload contains non-finite values");
  return v;
}

inline void write_volume(const std::string& path, const Volume& v) {
  const auto buf = encode_volume(v);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed: " + path);
}

inline Volume read_volume(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_volume(buf);
}

// ---------------------------------------------------------------------------

struct VolumeStats {
  double mean = 0, variance = 0, min = 0, max = 0;
};

/// Population statistics (variance divides by N).
inline VolumeStats stats_of(std::span<const float> values) {
  if (values.empty()) throw DataError("statistics of an empty sequence");
  VolumeStats s{0.0, 0.0, values[0], values[0]};
  for (float v : values) {
    s.mean += v;
    s.min = std::min<double>(s.min, v);
    s.max = std::max<double>(s.max, v);
  }
  s.mean /= static_cast<double>(values.size());
  for (float v : values) s.variance += (v - s.mean) * (v - s.mean);
  s.variance /= static_cast<double>(values.size());
  s.mean = std::clamp(s.mean, s.min, s.max);
  return s;
}

inline VolumeStats volume_stats(const Volume& v) { return stats_of(v.values()); }

inline std::vector<float> extract_trace(const Volume& v, TraceId t) {
  if (t.i >= v.grid().nx || t.j >= v.grid().ny) throw IndexError("trace index out of bounds");
  const auto tr = v.trace(t.i, t.j);
  return {tr.begin(), tr.end()};
}

inline void insert_trace(Volume& v, TraceId t, std::span<const float> trace) {
  if (t.i >= v.grid().nx || t.j >= v.grid().ny) throw IndexError("trace index out of bounds");
  if (trace.size() != v.grid().nz) throw DataError("trace length does not match nz");
  std::copy(trace.begin(), trace.end(), v.trace(t.i, t.j).begin());
}

// ---------------------------------------------------------------------------
// Well CSV: header `well,i,j,k,ip`, one row per sample.

inline WellSet read_wells(const std::string& path) {
  const auto table = csv::read_table(path);
  const auto cw = table.column("well"), ci = table.column("i"), cj = table.column("j"),
             ck = table.column("k"), cip = table.column("ip");
  WellSet set;
  std::map<std::string, std::size_t> slot;
  for (const auto& row : table.rows) {
    const auto& name = row[cw];
    const auto i = csv::to_int(row[ci]), j = csv::to_int(row[cj]), k = csv::to_int(row[ck]);
    if (i < 0 || j < 0 || k < 0) throw IndexError("negative well index in " + path);
    auto it = slot.find(name);
    if (it == slot.end()) {
      it = slot.emplace(name, set.wells.size()).first;
      set.wells.push_back(Well{name, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), {}});
    }
    Well& w = set.wells[it->second];
    if (w.i != i || w.j != j) throw DataError("well " + name + " changes column; deviated wells unsupported");
    w.samples.push_back({static_cast<std::uint32_t>(k), static_cast<float>(csv::to_double(row[cip]))});
  }
  return set;
}

inline std::string format_wells(const WellSet& set) {
  std::string out = "well,i,j,k,ip\n";
  for (const auto& w : set.wells)
    for (const auto& s : w.samples)
      out += w.name + ',' + std::to_string(w.i) + ',' + std::to_string(w.j) + ',' + std::to_string(s.k) + ',' +
             csv::fmt(s.ip) + '\n';
  return out;
}

inline void write_wells(const std::string& path, const WellSet& set) { csv::write_text(path, format_wells(set)); }

}  // namespace gsuq
