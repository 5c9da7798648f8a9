#pragma once

#include "pipelens/relation.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pipelens {

//! Cells as read, before typing. An empty cell is nullopt.
struct CsvTable {
	std::vector<std::string> header;
	std::vector<std::vector<std::optional<std::string>>> records;
};

//! RFC 4180 reader (header row required, LF or CRLF line ends). `origin`
//! names the input in CsvError messages.
CsvTable parse_csv_table(std::string_view text, const std::string &origin);

//! Column typing: Int if every non-empty cell is an integer, else Float if
//! every one is a finite float, else Bool if all are true/false, else Text.
ValueType infer_column_type(const CsvTable &table, std::size_t column);

//! Typed relation with row ids (source_id, 0..n-1) and no annotation slots.
Relation parse_csv(std::string_view text, const std::string &source_id, const std::string &origin);

std::string read_file(const std::filesystem::path &path);

Relation read_csv(const std::filesystem::path &path, const std::string &source_id);

} // namespace pipelens
