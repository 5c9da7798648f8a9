#include "pipelens/relation.hpp"

#include "pipelens/errors.hpp"
#include "pipelens/hash.hpp"

#include <algorithm>
#include <unordered_set>

namespace pipelens {

Schema::Schema(std::vector<Column> columns) : columns_(std::move(columns)) {
	std::unordered_set<std::string> seen;
	for (const auto &c : columns_) {
		if (!seen.insert(c.name).second) {
			throw Error("duplicate column name '" + c.name + "'");
		}
	}
}

std::optional<std::size_t> Schema::index_of(std::string_view name) const {
	for (std::size_t i = 0; i < columns_.size(); i++) {
		if (columns_[i].name == name) {
			return i;
		}
	}
	return std::nullopt;
}

std::vector<std::string> Schema::names() const {
	std::vector<std::string> out;
	out.reserve(columns_.size());
	for (const auto &c : columns_) {
		out.push_back(c.name);
	}
	return out;
}

std::string Schema::to_string() const {
	std::string out = "(";
	for (std::size_t i = 0; i < columns_.size(); i++) {
		if (i > 0) {
			out += ", ";
		}
		out += columns_[i].name;
		out += ": ";
		out += pipelens::to_string(columns_[i].type);
	}
	return out + ")";
}

std::string RowId::to_string() const {
	return source + "#" + std::to_string(index);
}

void LineageSet::insert(const RowId &id) {
	auto it = std::lower_bound(tokens_.begin(), tokens_.end(), id);
	if (it == tokens_.end() || *it != id) {
		tokens_.insert(it, id);
	}
}

void LineageSet::merge(const LineageSet &other) {
	std::vector<RowId> merged;
	merged.reserve(tokens_.size() + other.tokens_.size());
	std::set_union(tokens_.begin(), tokens_.end(), other.tokens_.begin(), other.tokens_.end(),
	               std::back_inserter(merged));
	tokens_ = std::move(merged);
}

bool LineageSet::contains(const RowId &id) const {
	return std::binary_search(tokens_.begin(), tokens_.end(), id);
}

namespace {

std::array<std::size_t, 3> bloom_positions(const RowId &id) {
	std::uint64_t h = row_hash(0x9e3779b97f4a7c15ULL, id);
	std::uint64_t h2 = (h >> 32) | (h << 32);
	h2 ^= 0xff51afd7ed558ccdULL;
	std::array<std::size_t, 3> pos {};
	for (std::size_t i = 0; i < pos.size(); i++) {
		pos[i] = static_cast<std::size_t>((h + i * h2) % LineageDigest::kBits);
	}
	return pos;
}

} // namespace

void LineageDigest::add(const RowId &id) {
	count++;
	for (auto p : bloom_positions(id)) {
		bloom[p / 64] |= (std::uint64_t {1} << (p % 64));
	}
}

bool LineageDigest::maybe_contains(const RowId &id) const {
	for (auto p : bloom_positions(id)) {
		if ((bloom[p / 64] & (std::uint64_t {1} << (p % 64))) == 0) {
			return false;
		}
	}
	return true;
}

void Relation::check_invariants() const {
	if (rows.size() != row_ids.size()) {
		throw Error("relation has " + std::to_string(rows.size()) + " rows but " + std::to_string(row_ids.size()) +
		            " row ids");
	}
	if (annotations.rows() != rows.size()) {
		throw Error("relation has " + std::to_string(rows.size()) + " rows but " +
		            std::to_string(annotations.rows()) + " annotation rows");
	}
	for (const auto &row : rows) {
		if (row.size() != schema.size()) {
			throw Error("row width " + std::to_string(row.size()) + " does not match schema " + schema.to_string());
		}
		for (std::size_t c = 0; c < row.size(); c++) {
			if (!row[c].is_null() && row[c].type() != schema[c].type) {
				throw Error("value of type " + std::string(pipelens::to_string(row[c].type())) + " in column '" +
				            schema[c].name + "' of type " + std::string(pipelens::to_string(schema[c].type)));
			}
		}
	}
}

} // namespace pipelens
