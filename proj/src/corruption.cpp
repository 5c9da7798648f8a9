#include "pipelens/corruption.hpp"

#include "pipelens/errors.hpp"
#include "pipelens/hash.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace pipelens {

std::string_view to_string(CorruptionKind kind) {
	switch (kind) {
	case CorruptionKind::MissingValues:
		return "missing_values";
	case CorruptionKind::Outliers:
		return "outliers";
	case CorruptionKind::CategorySwap:
		return "category_swap";
	}
	return "?";
}

std::optional<CorruptionKind> corruption_kind_from_string(std::string_view name) {
	for (auto k : {CorruptionKind::MissingValues, CorruptionKind::Outliers, CorruptionKind::CategorySwap}) {
		if (to_string(k) == name) {
			return k;
		}
	}
	return std::nullopt;
}

std::string_view to_string(Branch branch) {
	switch (branch) {
	case Branch::Train:
		return "train";
	case Branch::Test:
		return "test";
	case Branch::Both:
		return "both";
	}
	return "?";
}

std::optional<Branch> branch_from_string(std::string_view name) {
	for (auto b : {Branch::Train, Branch::Test, Branch::Both}) {
		if (to_string(b) == name) {
			return b;
		}
	}
	return std::nullopt;
}

std::vector<std::size_t> corruption_targets(const std::vector<RowId> &row_ids, double fraction, std::uint64_t seed) {
	const std::size_t n = row_ids.size();
	auto k = static_cast<std::size_t>(std::llround(std::clamp(fraction, 0.0, 1.0) * static_cast<double>(n)));
	if (k == 0) {
		return {};
	}
	std::vector<std::tuple<double, std::uint64_t, std::size_t>> ranked;
	ranked.reserve(n);
	for (std::size_t i = 0; i < n; i++) {
		std::uint64_t h = row_hash(seed, row_ids[i]);
		ranked.emplace_back(hash_bucket(h), h, i);
	}
	std::sort(ranked.begin(), ranked.end());
	std::vector<std::size_t> out;
	out.reserve(k);
	for (std::size_t i = 0; i < k; i++) {
		out.push_back(std::get<2>(ranked[i]));
	}
	std::sort(out.begin(), out.end());
	return out;
}

Relation corrupt(const Relation &relation, const std::string &column, CorruptionKind kind, double fraction,
                 double factor, std::uint64_t seed) {
	auto idx = relation.schema.index_of(column);
	if (!idx) {
		throw UnknownColumn("", column);
	}
	ValueType type = relation.schema[*idx].type;
	if (kind == CorruptionKind::Outliers && !is_numeric(type)) {
		throw TypeMismatch("outlier corruption needs a numeric column, '" + column + "' is " +
		                   std::string(to_string(type)));
	}
	if (kind == CorruptionKind::CategorySwap && type != ValueType::Text) {
		throw TypeMismatch("category swap needs a text column, '" + column + "' is " + std::string(to_string(type)));
	}

	Relation out = relation;
	auto targets = corruption_targets(relation.row_ids, fraction, seed);
	if (targets.empty()) {
		return out;
	}

	std::vector<std::string> categories;
	if (kind == CorruptionKind::CategorySwap) {
		for (const auto &row : relation.rows) {
			if (!row[*idx].is_null()) {
				categories.push_back(row[*idx].as_text());
			}
		}
		std::sort(categories.begin(), categories.end());
		categories.erase(std::unique(categories.begin(), categories.end()), categories.end());
	}

	for (std::size_t r : targets) {
		Value &cell = out.rows[r][*idx];
		switch (kind) {
		case CorruptionKind::MissingValues:
			cell = Value();
			break;
		case CorruptionKind::Outliers:
			if (cell.type() == ValueType::Int) {
				cell = Value(static_cast<std::int64_t>(std::llround(static_cast<double>(cell.as_int()) * factor)));
			} else if (cell.type() == ValueType::Float) {
				cell = Value(cell.as_float() * factor);
			}
			break;
		case CorruptionKind::CategorySwap: {
			std::vector<const std::string *> candidates;
			for (const auto &c : categories) {
				if (cell.is_null() || c != cell.as_text()) {
					candidates.push_back(&c);
				}
			}
			if (candidates.empty()) {
				break;
			}
			std::uint64_t h = fnv1a64("swap", row_hash(seed, relation.row_ids[r]));
			cell = Value(*candidates[h % candidates.size()]);
			break;
		}
		}
	}
	return out;
}

} // namespace pipelens
