#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace oocheck {

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);

/// Whole-file contents; throws ImageUnavailable when the file cannot be read.
std::string read_image_bytes(const std::filesystem::path& path);

std::string base64_encode(std::string_view bytes);

bool is_url(std::string_view image_ref);

/// Resolves a claim image reference against `root` unless it is absolute or a URL.
std::string resolve_image(std::string_view image_ref, const std::filesystem::path& root);

/// Digest identifying image content: file bytes for local paths, the URL text
/// for remote references.
std::string image_digest(std::string_view image_ref);

}  // namespace oocheck
