#include "promptsteer/hashing.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <array>
#include <memory>

#include "promptsteer/errors.hpp"

namespace promptsteer {

namespace {

using Digest = std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)>;

std::string to_hex(const unsigned char* data, std::size_t n) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(2 * n, '0');
  for (std::size_t i = 0; i < n; ++i) {
    out[2 * i] = kDigits[data[i] >> 4];
    out[2 * i + 1] = kDigits[data[i] & 0xF];
  }
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr);
  return to_hex(digest.data(), len);
}

std::uint64_t stable_hash64(std::string_view data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string keyed_expand(std::string_view key, std::string_view message, std::size_t length) {
  std::string prefix;
  prefix.reserve(key.size() + 1 + message.size() + 8);
  prefix.append(key);
  prefix.push_back('\0');
  prefix.append(message);

  std::string out;
  out.reserve(length + SHA256_DIGEST_LENGTH);
  Digest base(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  Digest ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(base.get(), EVP_sha256(), nullptr);
  EVP_DigestUpdate(base.get(), prefix.data(), prefix.size());
  std::array<unsigned char, EVP_MAX_MD_SIZE> block{};
  unsigned int block_len = 0;
  for (std::uint64_t counter = 0; out.size() < length; ++counter) {
    std::array<unsigned char, 8> be{};
    for (int i = 0; i < 8; ++i) be[7 - i] = static_cast<unsigned char>(counter >> (8 * i));
    EVP_MD_CTX_copy_ex(ctx.get(), base.get());
    EVP_DigestUpdate(ctx.get(), be.data(), be.size());
    EVP_DigestFinal_ex(ctx.get(), block.data(), &block_len);
    out.append(reinterpret_cast<const char*>(block.data()), block_len);
  }
  out.resize(length);
  return out;
}

std::string base64_encode(std::string_view data) {
  std::string out(4 * ((data.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(data.data()),
                                static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw FormatError("base64 length not a multiple of 4");
  std::string out(3 * text.size() / 4, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw FormatError("invalid base64");
  std::size_t len = static_cast<std::size_t>(n);
  // EVP_DecodeBlock keeps the padding bytes; trim them.
  if (!text.empty() && text.back() == '=') --len;
  if (text.size() >= 2 && text[text.size() - 2] == '=') --len;
  out.resize(len);
  return out;
}

}  // namespace promptsteer
