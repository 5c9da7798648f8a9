#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pipelens {

//! A validation finding attached to a plan node.
struct Diagnostic {
	std::string node;
	std::string message;

	bool operator==(const Diagnostic &) const = default;
};

std::string format_diagnostics(const std::vector<Diagnostic> &diagnostics);

//! Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

//! Malformed pipeline document or predicate text.
class SyntaxError : public Error {
public:
	SyntaxError(std::size_t line, std::size_t column, std::string message, std::vector<std::string> expected = {});

	std::size_t line;
	std::size_t column;
	//! Grammar alternatives that would have been accepted at the error location.
	std::vector<std::string> expected;
};

//! Well-formed document that violates a structural rule; `path` locates the offending field.
class SemanticError : public Error {
public:
	SemanticError(std::string path, const std::string &message);
	std::string path;
};

class IoError : public Error {
public:
	IoError(std::string path, const std::string &message);
	std::string path;
};

class CsvError : public Error {
public:
	CsvError(std::string path, std::size_t line, const std::string &message);
	std::string path;
	std::size_t line;
};

class UnknownColumn : public Error {
public:
	UnknownColumn(std::string node, std::string column);
	std::string node;
	std::string column;
};

class InvalidPlan : public Error {
public:
	explicit InvalidPlan(std::vector<Diagnostic> diagnostics);
	std::vector<Diagnostic> diagnostics;
};

class NonNumeric : public Error {
public:
	NonNumeric(std::string column, std::string row_id);
	std::string column;
	std::string row_id;
};

class MissingLabel : public Error {
public:
	explicit MissingLabel(std::string row_id);
	std::string row_id;
};

class EmptyTestSet : public Error {
public:
	EmptyTestSet();
};

class DimensionMismatch : public Error {
public:
	using Error::Error;
};

class AlignmentError : public Error {
public:
	using Error::Error;
};

class MissingGroup : public Error {
public:
	explicit MissingGroup(std::string group);
	std::string group;
};

class UndefinedRate : public Error {
public:
	using Error::Error;
};

class TypeMismatch : public Error {
public:
	using Error::Error;
};

class UnknownTarget : public Error {
public:
	explicit UnknownTarget(std::string target);
	std::string target;
};

class InvalidAfterPatch : public Error {
public:
	InvalidAfterPatch(const std::string &message, std::vector<Diagnostic> diagnostics);
	std::vector<Diagnostic> diagnostics;
};

class ConflictingPatches : public Error {
public:
	using Error::Error;
};

//! An execution failure in a shared plan, tagged with the variants it affected.
class ExecutionError : public Error {
public:
	ExecutionError(const std::string &message, std::vector<std::string> variants);
	std::vector<std::string> variants;
};

} // namespace pipelens
