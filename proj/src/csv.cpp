#include "pipelens/csv.hpp"

#include "pipelens/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace pipelens {

namespace {

std::optional<std::int64_t> parse_int(std::string_view s) {
	std::int64_t v = 0;
	auto res = std::from_chars(s.data(), s.data() + s.size(), v);
	if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
		return std::nullopt;
	}
	return v;
}

std::optional<double> parse_float(std::string_view s) {
	double v = 0;
	auto res = std::from_chars(s.data(), s.data() + s.size(), v);
	if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
		return std::nullopt;
	}
	return v;
}

} // namespace

CsvTable parse_csv_table(std::string_view text, const std::string &origin) {
	if (text.substr(0, 3) == "\xEF\xBB\xBF") {
		text.remove_prefix(3);
	}
	std::vector<std::vector<std::optional<std::string>>> records;
	std::vector<std::size_t> record_lines;

	std::size_t pos = 0;
	std::size_t line = 1;
	while (pos < text.size()) {
		std::size_t record_line = line;
		std::vector<std::optional<std::string>> fields;
		bool blank = true;
		while (true) {
			std::string field;
			bool quoted = false;
			if (pos < text.size() && text[pos] == '"') {
				quoted = true;
				blank = false;
				pos++;
				while (true) {
					if (pos >= text.size()) {
						throw CsvError(origin, record_line, "unterminated quoted field");
					}
					char c = text[pos++];
					if (c == '"') {
						if (pos < text.size() && text[pos] == '"') {
							field += '"';
							pos++;
							continue;
						}
						break;
					}
					if (c == '\n') {
						line++;
					}
					field += c;
				}
				if (pos < text.size() && text[pos] != ',' && text[pos] != '\n' && text[pos] != '\r') {
					throw CsvError(origin, line, "unexpected character after closing quote");
				}
			} else {
				while (pos < text.size() && text[pos] != ',' && text[pos] != '\n' && text[pos] != '\r') {
					if (text[pos] == '"') {
						throw CsvError(origin, line, "quote inside unquoted field");
					}
					field += text[pos++];
				}
			}
			if (!field.empty()) {
				blank = false;
			}
			fields.push_back(field.empty() && !quoted ? std::nullopt : std::optional<std::string>(field));
			if (fields.back() && fields.back()->empty()) {
				fields.back() = std::nullopt;
			}
			if (pos < text.size() && text[pos] == ',') {
				blank = false;
				pos++;
				continue;
			}
			break;
		}
		if (pos < text.size() && text[pos] == '\r') {
			pos++;
		}
		if (pos < text.size() && text[pos] == '\n') {
			pos++;
		}
		line++;
		if (blank) {
			continue;
		}
		records.push_back(std::move(fields));
		record_lines.push_back(record_line);
	}

	if (records.empty()) {
		throw CsvError(origin, 1, "missing header row");
	}
	CsvTable table;
	for (std::size_t i = 0; i < records[0].size(); i++) {
		if (!records[0][i]) {
			throw CsvError(origin, record_lines[0], "empty column name at position " + std::to_string(i + 1));
		}
		table.header.push_back(*records[0][i]);
	}
	for (std::size_t r = 1; r < records.size(); r++) {
		if (records[r].size() != table.header.size()) {
			throw CsvError(origin, record_lines[r],
			               "expected " + std::to_string(table.header.size()) + " fields, found " +
			                   std::to_string(records[r].size()));
		}
		table.records.push_back(std::move(records[r]));
	}
	return table;
}

ValueType infer_column_type(const CsvTable &table, std::size_t column) {
	bool all_int = true;
	bool all_float = true;
	bool all_bool = true;
	for (const auto &rec : table.records) {
		const auto &cell = rec[column];
		if (!cell) {
			continue;
		}
		all_int = all_int && parse_int(*cell).has_value();
		all_float = all_float && parse_float(*cell).has_value();
		all_bool = all_bool && (*cell == "true" || *cell == "false");
	}
	if (all_int) {
		return ValueType::Int;
	}
	if (all_float) {
		return ValueType::Float;
	}
	if (all_bool) {
		return ValueType::Bool;
	}
	return ValueType::Text;
}

Relation parse_csv(std::string_view text, const std::string &source_id, const std::string &origin) {
	CsvTable table = parse_csv_table(text, origin);
	std::vector<Column> cols;
	for (std::size_t c = 0; c < table.header.size(); c++) {
		cols.push_back({table.header[c], infer_column_type(table, c)});
	}
	Relation rel;
	try {
		rel.schema = Schema(std::move(cols));
	} catch (const Error &e) {
		throw CsvError(origin, 1, e.what());
	}
	rel.rows.reserve(table.records.size());
	for (std::size_t r = 0; r < table.records.size(); r++) {
		Row row;
		row.reserve(rel.schema.size());
		for (std::size_t c = 0; c < rel.schema.size(); c++) {
			const auto &cell = table.records[r][c];
			if (!cell) {
				row.emplace_back();
				continue;
			}
			switch (rel.schema[c].type) {
			case ValueType::Int:
				row.emplace_back(*parse_int(*cell));
				break;
			case ValueType::Float:
				row.emplace_back(*parse_float(*cell));
				break;
			case ValueType::Bool:
				row.emplace_back(*cell == "true");
				break;
			default:
				row.emplace_back(*cell);
				break;
			}
		}
		rel.rows.push_back(std::move(row));
		rel.row_ids.push_back({source_id, r});
	}
	rel.annotations = AnnotationTable(rel.rows.size(), 0);
	return rel;
}

std::string read_file(const std::filesystem::path &path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw IoError(path.string(), "cannot open file");
	}
	std::ostringstream buf;
	buf << in.rdbuf();
	if (in.bad()) {
		throw IoError(path.string(), "read failed");
	}
	return buf.str();
}

Relation read_csv(const std::filesystem::path &path, const std::string &source_id) {
	return parse_csv(read_file(path), source_id, path.string());
}

} // namespace pipelens
