#pragma once

#include <array>
#include <cstdio>
#include <string>
#include <string_view>

#include <openssl/evp.h>

#include "scatlab/core/errors.hpp"

namespace scatlab {

/// Lowercase hex SHA-256 of `data`.
inline std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw numeric_error("DigestFailure", "SHA-256 computation failed");
  std::string out;
  out.reserve(2 * len);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    out += buf;
  }
  return out;
}

}  // namespace scatlab
