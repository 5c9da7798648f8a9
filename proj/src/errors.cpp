#include "pipelens/errors.hpp"

#include <sstream>

namespace pipelens {

std::string format_diagnostics(const std::vector<Diagnostic> &diagnostics) {
	std::ostringstream out;
	for (const auto &d : diagnostics) {
		out << (d.node.empty() ? "<plan>" : d.node) << ": " << d.message << "\n";
	}
	return out.str();
}

namespace {

std::string syntax_message(std::size_t line, std::size_t column, const std::string &message,
                           const std::vector<std::string> &expected) {
	std::ostringstream out;
	out << "syntax error at " << line << ":" << column << ": " << message;
	if (!expected.empty()) {
		out << " (expected ";
		for (std::size_t i = 0; i < expected.size(); i++) {
			out << (i == 0 ? "" : ", ") << expected[i];
		}
		out << ")";
	}
	return out.str();
}

} // namespace

SyntaxError::SyntaxError(std::size_t line_p, std::size_t column_p, std::string message,
                         std::vector<std::string> expected_p)
    : Error(syntax_message(line_p, column_p, message, expected_p)), line(line_p), column(column_p),
      expected(std::move(expected_p)) {
}

SemanticError::SemanticError(std::string path_p, const std::string &message)
    : Error(path_p + ": " + message), path(std::move(path_p)) {
}

IoError::IoError(std::string path_p, const std::string &message)
    : Error(path_p + ": " + message), path(std::move(path_p)) {
}

CsvError::CsvError(std::string path_p, std::size_t line_p, const std::string &message)
    : Error(path_p + ":" + std::to_string(line_p) + ": " + message), path(std::move(path_p)), line(line_p) {
}

UnknownColumn::UnknownColumn(std::string node_p, std::string column_p)
    : Error("unknown column '" + column_p + "' at node '" + node_p + "'"), node(std::move(node_p)),
      column(std::move(column_p)) {
}

InvalidPlan::InvalidPlan(std::vector<Diagnostic> diagnostics_p)
    : Error("invalid plan:\n" + format_diagnostics(diagnostics_p)), diagnostics(std::move(diagnostics_p)) {
}

NonNumeric::NonNumeric(std::string column_p, std::string row_id_p)
    : Error("non-numeric value in column '" + column_p + "' at row " + row_id_p), column(std::move(column_p)),
      row_id(std::move(row_id_p)) {
}

MissingLabel::MissingLabel(std::string row_id_p)
    : Error("missing label at row " + row_id_p), row_id(std::move(row_id_p)) {
}

EmptyTestSet::EmptyTestSet() : Error("empty test set: no rows to score") {
}

MissingGroup::MissingGroup(std::string group_p)
    : Error("no rows belong to privileged group '" + group_p + "'"), group(std::move(group_p)) {
}

UnknownTarget::UnknownTarget(std::string target_p)
    : Error("unknown patch target '" + target_p + "'"), target(std::move(target_p)) {
}

InvalidAfterPatch::InvalidAfterPatch(const std::string &message, std::vector<Diagnostic> diagnostics_p)
    : Error(message + (diagnostics_p.empty() ? "" : ":\n" + format_diagnostics(diagnostics_p))),
      diagnostics(std::move(diagnostics_p)) {
}

ExecutionError::ExecutionError(const std::string &message, std::vector<std::string> variants_p)
    : Error(message), variants(std::move(variants_p)) {
}

} // namespace pipelens
