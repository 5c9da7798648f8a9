#include "pipelens/hash.hpp"

#include "pipelens/relation.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace pipelens {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state) {
	return fnv1a64(std::span(reinterpret_cast<const std::uint8_t *>(bytes.data()), bytes.size()), state);
}

std::uint64_t fnv1a64_u64le(std::uint64_t value, std::uint64_t state) {
	std::array<std::uint8_t, 8> le {};
	for (std::size_t i = 0; i < le.size(); i++) {
		le[i] = static_cast<std::uint8_t>(value >> (8 * i));
	}
	return fnv1a64(le, state);
}

std::uint64_t row_hash(std::uint64_t seed, const RowId &id) {
	std::uint64_t h = fnv1a64_u64le(seed);
	h = fnv1a64(id.source, h);
	return fnv1a64_u64le(id.index, h);
}

double hash_bucket(std::uint64_t h) {
	return static_cast<double>(h % 1000000ULL) / 1e6;
}

SplitSide split_assign(const RowId &id, std::uint64_t seed, double test_fraction) {
	return hash_bucket(row_hash(seed, id)) < test_fraction ? SplitSide::Test : SplitSide::Train;
}

Sha256Digest sha256(std::string_view bytes) {
	Sha256Digest out {};
	unsigned int len = 0;
	if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size()) {
		throw std::runtime_error("sha256 digest failed");
	}
	return out;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
	static constexpr char kDigits[] = "0123456789abcdef";
	std::string out;
	out.reserve(bytes.size() * 2);
	for (auto b : bytes) {
		out.push_back(kDigits[b >> 4]);
		out.push_back(kDigits[b & 0xf]);
	}
	return out;
}

} // namespace pipelens
