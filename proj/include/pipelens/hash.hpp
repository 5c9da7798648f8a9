#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace pipelens {

struct RowId;

inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

//! FNV-1a 64-bit, continuing from `state`.
constexpr std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t state = kFnvOffsetBasis) {
	for (auto b : bytes) {
		state ^= b;
		state *= kFnvPrime;
	}
	return state;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state = kFnvOffsetBasis);
std::uint64_t fnv1a64_u64le(std::uint64_t value, std::uint64_t state = kFnvOffsetBasis);

//! FNV-1a over (seed little-endian || source bytes || index little-endian).
std::uint64_t row_hash(std::uint64_t seed, const RowId &id);

//! Bucket of a row hash in [0, 1): (h mod 10^6) / 10^6.
double hash_bucket(std::uint64_t h);

enum class SplitSide { Train, Test };

//! Deterministic train/test assignment; independent of row order.
SplitSide split_assign(const RowId &id, std::uint64_t seed, double test_fraction);

using Sha256Digest = std::array<std::uint8_t, 32>;

Sha256Digest sha256(std::string_view bytes);
std::string to_hex(std::span<const std::uint8_t> bytes);

} // namespace pipelens
