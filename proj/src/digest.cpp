#include "oocheck/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <iterator>
#include <memory>

#include "oocheck/errors.hpp"

namespace oocheck {

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 0x0F];
  }
  return out;
}

std::string read_image_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageUnavailable("cannot read image: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw ImageUnavailable("error reading image: " + path.string());
  return bytes;
}

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

bool is_url(std::string_view ref) { return ref.starts_with("http://") || ref.starts_with("https://"); }

std::string resolve_image(std::string_view ref, const std::filesystem::path& root) {
  if (is_url(ref)) return std::string(ref);
  std::filesystem::path p{std::string(ref)};
  if (p.is_absolute() || root.empty()) return p.string();
  return (root / p).string();
}

std::string image_digest(std::string_view ref) {
  if (is_url(ref)) return sha256_hex(ref);
  return sha256_hex(read_image_bytes(std::string(ref)));
}

}  // namespace oocheck
