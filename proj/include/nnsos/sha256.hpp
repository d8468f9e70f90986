#pragma once

#include <string>
#include <string_view>

namespace nnsos {

// Hex digest of the SHA-256 of a byte string / file contents.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::string& path);

}  // namespace nnsos
