#pragma once

// Strict JSON field readers shared by the document and config parsers.

#include "pipelens/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace pipelens::detail {

using nlohmann::json;

inline std::string join_path(const std::string &base, const std::string &key) {
	return base.empty() ? key : base + "." + key;
}

inline std::string index_path(const std::string &base, std::size_t i) {
	return base + "[" + std::to_string(i) + "]";
}

inline void require_object(const json &j, const std::string &path) {
	if (!j.is_object()) {
		throw SemanticError(path, "expected an object");
	}
}

//! Rejects keys outside `allowed`, and missing keys from `required`.
inline void check_keys(const json &j, const std::string &path, std::initializer_list<std::string_view> allowed,
                std::initializer_list<std::string_view> required) {
	require_object(j, path);
	for (const auto &[key, value] : j.items()) {
		if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
			throw SemanticError(join_path(path, key), "unknown key");
		}
	}
	for (auto key : required) {
		if (!j.contains(key)) {
			throw SemanticError(join_path(path, std::string(key)), "missing required key");
		}
	}
}

inline std::string get_string(const json &j, const std::string &path) {
	if (!j.is_string()) {
		throw SemanticError(path, "expected a string");
	}
	return j.get<std::string>();
}

inline std::string get_nonempty_string(const json &j, const std::string &path) {
	auto s = get_string(j, path);
	if (s.empty()) {
		throw SemanticError(path, "must not be empty");
	}
	return s;
}

inline double get_number(const json &j, const std::string &path) {
	if (!j.is_number()) {
		throw SemanticError(path, "expected a number");
	}
	return j.get<double>();
}

inline std::uint64_t get_u64(const json &j, const std::string &path) {
	if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
		throw SemanticError(path, "expected a non-negative integer");
	}
	return j.get<std::uint64_t>();
}

inline std::vector<std::string> get_string_list(const json &j, const std::string &path) {
	if (!j.is_array()) {
		throw SemanticError(path, "expected an array");
	}
	std::vector<std::string> out;
	for (std::size_t i = 0; i < j.size(); i++) {
		out.push_back(get_nonempty_string(j[i], index_path(path, i)));
	}
	return out;
}

} // namespace pipelens::detail
