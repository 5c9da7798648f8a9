#pragma once

#include "pipelens/relation.hpp"
#include "pipelens/value.hpp"

#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pipelens {

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge };

std::string_view to_string(CompareOp op);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

//! `column <op> literal`
struct Comparison {
	std::string column;
	CompareOp op;
	Value literal;
};

//! `column is null` / `column is not null`
struct NullTest {
	std::string column;
	bool negated = false;
};

struct Conjunction {
	ExprPtr lhs;
	ExprPtr rhs;
};

struct Disjunction {
	ExprPtr lhs;
	ExprPtr rhs;
};

struct Negation {
	ExprPtr operand;
};

struct Expr {
	std::variant<Comparison, NullTest, Conjunction, Disjunction, Negation> node;
};

//! An immutable boolean expression over the columns of one row.
//!
//! Comparisons with a Null operand are false (is-null tests excepted), so a
//! negated comparison over Null is true. Equality of predicates is equality of
//! their canonical text.
class Predicate {
public:
	Predicate() = default;
	explicit Predicate(ExprPtr root) : root_(std::move(root)) {
	}

	const Expr &root() const {
		return *root_;
	}
	bool empty() const {
		return root_ == nullptr;
	}

	//! Fully parenthesized canonical form; parse_predicate(to_string()) yields an equal tree.
	std::string to_string() const;
	//! Referenced columns in first-occurrence order.
	std::vector<std::string> columns() const;

	//! Throws UnknownColumn (with node "") when a referenced column is missing from the schema.
	bool evaluate(const Schema &schema, const Row &row) const;

	bool operator==(const Predicate &other) const {
		return to_string() == other.to_string();
	}

private:
	ExprPtr root_;
};

//! Grammar (lowest to highest precedence, all binary forms left associative):
//!
//!   expr    := or_expr
//!   or_expr := and_expr ("or" and_expr)*
//!   and_expr:= unary ("and" unary)*
//!   unary   := "not" unary | atom
//!   atom    := ident cmp literal | ident "is" ["not"] "null" | "(" expr ")"
//!
//! Throws SyntaxError (line 1, column = offset + 1) carrying the expected set.
Predicate parse_predicate(std::string_view src);

//! Structural tree dump used by tests, e.g. `Or(Cmp(a == 1), And(...))`.
std::string debug_tree(const Expr &expr);

} // namespace pipelens
