#include "stepforge/util/hash.hpp"

#include <array>
#include <cstdio>

#include <openssl/evp.h>

namespace stepforge::util {

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr);
  std::string out;
  out.reserve(len * 2);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    out += buf;
  }
  return out;
}

std::string short_id(std::string_view prefix, std::string_view material, std::size_t length) {
  return std::string(prefix) + sha256_hex(material).substr(0, length);
}

}  // namespace stepforge::util
