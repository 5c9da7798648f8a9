#include "pipelens/value.hpp"

#include <charconv>
#include <cmath>

namespace pipelens {

std::string_view to_string(ValueType type) {
	switch (type) {
	case ValueType::Null:
		return "null";
	case ValueType::Bool:
		return "bool";
	case ValueType::Int:
		return "int";
	case ValueType::Float:
		return "float";
	case ValueType::Text:
		return "text";
	}
	return "?";
}

double Value::as_number() const {
	if (type() == ValueType::Int) {
		return static_cast<double>(as_int());
	}
	return as_float();
}

std::string format_double(double d) {
	char buf[64];
	auto res = std::to_chars(buf, buf + sizeof(buf), d);
	return std::string(buf, res.ptr);
}

std::string Value::to_text() const {
	switch (type()) {
	case ValueType::Null:
		return "";
	case ValueType::Bool:
		return as_bool() ? "true" : "false";
	case ValueType::Int:
		return std::to_string(as_int());
	case ValueType::Float:
		return format_double(as_float());
	case ValueType::Text:
		return as_text();
	}
	return "";
}

std::optional<std::partial_ordering> compare_values(const Value &lhs, const Value &rhs) {
	if (lhs.is_null() || rhs.is_null()) {
		return std::nullopt;
	}
	if (lhs.is_numeric() && rhs.is_numeric()) {
		if (lhs.type() == ValueType::Int && rhs.type() == ValueType::Int) {
			return lhs.as_int() <=> rhs.as_int();
		}
		return lhs.as_number() <=> rhs.as_number();
	}
	if (lhs.type() != rhs.type()) {
		return std::nullopt;
	}
	if (lhs.type() == ValueType::Bool) {
		return lhs.as_bool() <=> rhs.as_bool();
	}
	return lhs.as_text().compare(rhs.as_text()) <=> 0;
}

std::strong_ordering total_order(const Value &lhs, const Value &rhs) {
	if (lhs.type() != rhs.type()) {
		return lhs.raw().index() <=> rhs.raw().index();
	}
	switch (lhs.type()) {
	case ValueType::Null:
		return std::strong_ordering::equal;
	case ValueType::Bool:
		return lhs.as_bool() <=> rhs.as_bool();
	case ValueType::Int:
		return lhs.as_int() <=> rhs.as_int();
	case ValueType::Float: {
		double a = lhs.as_float();
		double b = rhs.as_float();
		if (a < b) {
			return std::strong_ordering::less;
		}
		if (b < a) {
			return std::strong_ordering::greater;
		}
		return std::strong_ordering::equal;
	}
	case ValueType::Text:
		return lhs.as_text().compare(rhs.as_text()) <=> 0;
	}
	return std::strong_ordering::equal;
}

} // namespace pipelens
