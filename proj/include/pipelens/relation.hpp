#pragma once

#include "pipelens/value.hpp"

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace pipelens {

struct Column {
	std::string name;
	ValueType type = ValueType::Text;

	bool operator==(const Column &) const = default;
};

//! Ordered, uniquely named columns.
class Schema {
public:
	Schema() = default;
	//! Throws pipelens::Error on duplicate names.
	explicit Schema(std::vector<Column> columns);

	std::size_t size() const {
		return columns_.size();
	}
	const std::vector<Column> &columns() const {
		return columns_;
	}
	const Column &operator[](std::size_t i) const {
		return columns_[i];
	}
	std::optional<std::size_t> index_of(std::string_view name) const;
	bool contains(std::string_view name) const {
		return index_of(name).has_value();
	}
	std::vector<std::string> names() const;
	std::string to_string() const;

	bool operator==(const Schema &) const = default;

private:
	std::vector<Column> columns_;
};

//! Stable identity of a source tuple, assigned when a dataset is loaded.
struct RowId {
	std::string source;
	std::uint64_t index = 0;

	auto operator<=>(const RowId &) const = default;
	bool operator==(const RowId &) const = default;
	std::string to_string() const;
};

using Row = std::vector<Value>;

//! Why-provenance of one tuple: a sorted, duplicate-free set of source row ids.
class LineageSet {
public:
	LineageSet() = default;
	explicit LineageSet(RowId id) : tokens_{std::move(id)} {
	}

	void insert(const RowId &id);
	void merge(const LineageSet &other);
	bool contains(const RowId &id) const;
	std::size_t size() const {
		return tokens_.size();
	}
	bool empty() const {
		return tokens_.empty();
	}
	const std::vector<RowId> &tokens() const {
		return tokens_;
	}
	auto begin() const {
		return tokens_.begin();
	}
	auto end() const {
		return tokens_.end();
	}

	bool operator==(const LineageSet &) const = default;

private:
	std::vector<RowId> tokens_;
};

//! Approximate lineage for very large aggregates: exact count plus a bloom
//! filter, so membership queries may report false positives but never false
//! negatives.
struct LineageDigest {
	static constexpr std::size_t kBits = 4096;

	std::uint64_t count = 0;
	std::array<std::uint64_t, kBits / 64> bloom {};

	void add(const RowId &id);
	bool maybe_contains(const RowId &id) const;
	bool operator==(const LineageDigest &) const = default;
};

//! One inspection's per-row payload.
using Annotation = std::variant<std::monostate, LineageSet, LineageDigest, Value>;

//! Row-major table of annotation slots, exactly `width` slots per row where
//! width is the number of active inspections.
class AnnotationTable {
public:
	AnnotationTable() = default;
	AnnotationTable(std::size_t rows, std::size_t width) : width_(width), rows_(rows), slots_(rows * width) {
	}

	std::size_t width() const {
		return width_;
	}
	std::size_t rows() const {
		return rows_;
	}
	std::size_t slot_count() const {
		return slots_.size();
	}
	Annotation &at(std::size_t row, std::size_t slot) {
		return slots_[row * width_ + slot];
	}
	const Annotation &at(std::size_t row, std::size_t slot) const {
		return slots_[row * width_ + slot];
	}
	std::span<const Annotation> row(std::size_t r) const {
		return {slots_.data() + r * width_, width_};
	}

private:
	std::size_t width_ = 0;
	std::size_t rows_ = 0;
	std::vector<Annotation> slots_;
};

struct Relation {
	Schema schema;
	std::vector<Row> rows;
	std::vector<RowId> row_ids;
	AnnotationTable annotations;

	std::size_t size() const {
		return rows.size();
	}
	//! Throws pipelens::Error when row/row-id/annotation counts disagree or a cell violates its column type.
	void check_invariants() const;
};

//! Dense row-major encoding of a relation.
struct FeatureMatrix {
	std::size_t n_rows = 0;
	std::size_t n_cols = 0;
	std::vector<double> data;
	std::vector<std::string> columns;
	std::vector<RowId> row_ids;
	AnnotationTable annotations;

	double at(std::size_t r, std::size_t c) const {
		return data[r * n_cols + c];
	}
	double &at(std::size_t r, std::size_t c) {
		return data[r * n_cols + c];
	}
	std::span<const double> row(std::size_t r) const {
		return {data.data() + r * n_cols, n_cols};
	}
};

//! Binary labels (0.0/1.0) aligned with a FeatureMatrix, plus the sensitive
//! group of each row when one is configured (otherwise `groups` is empty).
struct LabelVector {
	std::vector<double> values;
	std::vector<RowId> row_ids;
	std::vector<Value> groups;

	std::size_t size() const {
		return values.size();
	}
};

struct Predictions {
	std::vector<double> probabilities;
	std::vector<RowId> row_ids;
	AnnotationTable annotations;

	std::size_t size() const {
		return probabilities.size();
	}
};

} // namespace pipelens
