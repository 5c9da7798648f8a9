#pragma once

#include <compare>
#include <concepts>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace pipelens {

enum class ValueType : std::uint8_t { Null, Bool, Int, Float, Text };

std::string_view to_string(ValueType type);

inline bool is_numeric(ValueType type) {
	return type == ValueType::Int || type == ValueType::Float;
}

//! A single cell. Equality is structural (same alternative, same payload); use
//! compare_values() for the widening comparison operators use.
class Value {
public:
	using Storage = std::variant<std::monostate, bool, std::int64_t, double, std::string>;

	Value() = default;
	Value(bool b) : storage(b) {
	}
	template <std::integral T>
	    requires(!std::same_as<T, bool>)
	Value(T i) : storage(static_cast<std::int64_t>(i)) {
	}
	Value(double d) : storage(d) {
	}
	Value(std::string s) : storage(std::move(s)) {
	}
	Value(const char *s) : storage(std::string(s)) {
	}

	ValueType type() const {
		return static_cast<ValueType>(storage.index());
	}
	bool is_null() const {
		return storage.index() == 0;
	}
	bool is_numeric() const {
		return pipelens::is_numeric(type());
	}

	bool as_bool() const {
		return std::get<bool>(storage);
	}
	std::int64_t as_int() const {
		return std::get<std::int64_t>(storage);
	}
	double as_float() const {
		return std::get<double>(storage);
	}
	const std::string &as_text() const {
		return std::get<std::string>(storage);
	}
	//! Int or Float widened to double.
	double as_number() const;

	//! Canonical text form: "" for Null, true/false, decimal ints, shortest round-trip floats.
	std::string to_text() const;

	const Storage &raw() const {
		return storage;
	}

	bool operator==(const Value &other) const = default;

private:
	Storage storage;
};

//! Comparison used by predicates and joins. Int and Float are widened to
//! double; any other cross-type pair, or a Null operand, is incomparable.
std::optional<std::partial_ordering> compare_values(const Value &lhs, const Value &rhs);

//! Deterministic total order for sorting: Null first, then by type, then by payload.
std::strong_ordering total_order(const Value &lhs, const Value &rhs);

struct ValueLess {
	bool operator()(const Value &lhs, const Value &rhs) const {
		return total_order(lhs, rhs) < 0;
	}
};

//! Shortest decimal text that parses back to the same double.
std::string format_double(double d);

} // namespace pipelens
