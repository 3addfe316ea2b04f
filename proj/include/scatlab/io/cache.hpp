#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "json.hpp"

#include "scatlab/core/errors.hpp"
#include "scatlab/core/version.hpp"
#include "scatlab/io/digest.hpp"
#include "scatlab/quantum/smatrix.hpp"

namespace scatlab {

/// Everything that determines an assembled S: the potential, h, M, backend and the
/// solver parameters (as canonical text supplied by the caller).
struct SmatrixKey {
  std::string potential_canonical;
  double h = 0.0;
  int M = 0;
  Backend backend = Backend::Radial;
  std::string solver_params;

  std::string canonical() const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", h);
    return "tool=" + std::string(kToolVersion) + ";cache=" + std::to_string(kCacheFormatVersion) +
           ";potential=" + potential_canonical + ";h=" + buf + ";M=" + std::to_string(M) +
           ";backend=" + backend_name(backend) + ";solver=" + solver_params;
  }
  std::string digest() const { return sha256_hex(canonical()); }
};

/// File layout: 8-byte magic, u32 format version, u64 header length, JSON header,
/// u8 diagonal flag, then the entries as little-endian (re, im) doubles in column order.
class SmatrixCache {
 public:
  explicit SmatrixCache(std::filesystem::path root) : dir_(std::move(root) / "cache" / "smatrix") {}

  std::filesystem::path path_for(const SmatrixKey& key) const { return dir_ / (key.digest() + ".bin"); }

  std::optional<ScatteringMatrix> load(const SmatrixKey& key) const {
    const auto path = path_for(key);
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    char magic[8];
    std::uint32_t version = 0;
    std::uint64_t hlen = 0;
    in.read(magic, 8);
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    in.read(reinterpret_cast<char*>(&hlen), sizeof hlen);
    if (!in || std::memcmp(magic, kMagic, 8) != 0 || version != kCacheFormatVersion || hlen > (1u << 24)) return std::nullopt;
    std::string header(hlen, '\0');
    in.read(header.data(), static_cast<std::streamsize>(hlen));
    const auto j = nlohmann::json::parse(header, nullptr, false);
    if (j.is_discarded() || j.value("key", std::string{}) != key.canonical()) return std::nullopt;
    std::uint8_t diag = 0;
    in.read(reinterpret_cast<char*>(&diag), 1);
    const int n = 2 * key.M + 1;
    const std::string hash = j.value("potential_hash", std::string{});
    if (diag) {
      Eigen::VectorXcd d(n);
      in.read(reinterpret_cast<char*>(d.data()), static_cast<std::streamsize>(sizeof(cplx) * n));
      if (!in) return std::nullopt;
      return ScatteringMatrix::diagonal(key.h, key.M, std::move(d), key.backend, hash);
    }
    Eigen::MatrixXcd m(n, n);
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(cplx) * n * n));
    if (!in) return std::nullopt;
    return ScatteringMatrix::dense(key.h, key.M, std::move(m), key.backend, hash);
  }

  /// Write to a temporary file in the cache directory, then rename into place.
  void store(const SmatrixKey& key, const ScatteringMatrix& s) const {
    std::filesystem::create_directories(dir_);
    const auto path = path_for(key);
    const auto tmp = path.string() + ".tmp" + std::to_string(reinterpret_cast<std::uintptr_t>(&s));
    nlohmann::json j;
    j["key"] = key.canonical();
    j["digest"] = key.digest();
    j["tool_version"] = kToolVersion;
    j["h"] = key.h;
    j["M"] = key.M;
    j["backend"] = backend_name(key.backend);
    j["potential_hash"] = s.potential_hash();
    j["solver_params"] = key.solver_params;
    const std::string header = j.dump();
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw config_error("CacheWriteFailure", "cannot write " + tmp);
      const std::uint32_t version = kCacheFormatVersion;
      const std::uint64_t hlen = header.size();
      out.write(kMagic, 8);
      out.write(reinterpret_cast<const char*>(&version), sizeof version);
      out.write(reinterpret_cast<const char*>(&hlen), sizeof hlen);
      out.write(header.data(), static_cast<std::streamsize>(hlen));
      const std::uint8_t diag = s.is_diagonal() ? 1 : 0;
      out.write(reinterpret_cast<const char*>(&diag), 1);
      if (s.is_diagonal())
        out.write(reinterpret_cast<const char*>(s.diagonal_entries().data()),
                  static_cast<std::streamsize>(sizeof(cplx) * s.diagonal_entries().size()));
      else
        out.write(reinterpret_cast<const char*>(s.dense_entries().data()),
                  static_cast<std::streamsize>(sizeof(cplx) * s.dense_entries().size()));
      if (!out) throw config_error("CacheWriteFailure", "short write to " + tmp);
    }
    std::filesystem::rename(tmp, path);
  }

 private:
  static constexpr char kMagic[8] = {'S', 'C', 'A', 'T', 'S', 'M', 'A', 'T'};
  std::filesystem::path dir_;
};

}  // namespace scatlab
