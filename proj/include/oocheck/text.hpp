#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace oocheck::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool istarts_with(std::string_view s, std::string_view prefix);

/// Case-insensitive (ASCII) search; npos when absent.
std::size_t ifind(std::string_view haystack, std::string_view needle, std::size_t from = 0);

std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

/// Lowercased maximal runs of alphanumerics. Bytes >= 0x80 count as
/// alphanumeric so UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view s);

}  // namespace oocheck::text

namespace oocheck::rng {

std::uint64_t splitmix64(std::uint64_t x);

/// Independent per-item seed derived from a run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Unbiased draw in [0, n) by rejection; unlike std::uniform_int_distribution
/// the sequence is identical across standard library implementations.
std::size_t uniform_index(std::mt19937_64& gen, std::size_t n);

/// Seeded Fisher-Yates permutation of [0, n).
std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed);

/// k distinct indices from [0, n), returned in ascending order.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, std::uint64_t seed);

}  // namespace oocheck::rng
