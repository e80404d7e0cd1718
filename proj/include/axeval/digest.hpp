#pragma once

#include <string>
#include <string_view>

namespace axeval {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Accumulates fields into an unambiguous byte stream (each field is
/// length-prefixed) and hashes the result. Two builders produce the same
/// digest iff they were fed the same sequence of fields.
class DigestBuilder {
 public:
  DigestBuilder& add(std::string_view field);
  DigestBuilder& add(long long value);
  std::string hex() const { return sha256_hex(buffer_); }

 private:
  std::string buffer_;
};

}  // namespace axeval
