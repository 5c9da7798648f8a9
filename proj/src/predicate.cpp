#include "pipelens/predicate.hpp"

#include "pipelens/errors.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

namespace pipelens {

std::string_view to_string(CompareOp op) {
	switch (op) {
	case CompareOp::Eq:
		return "==";
	case CompareOp::Ne:
		return "!=";
	case CompareOp::Lt:
		return "<";
	case CompareOp::Le:
		return "<=";
	case CompareOp::Gt:
		return ">";
	case CompareOp::Ge:
		return ">=";
	}
	return "?";
}

namespace {

std::string literal_text(const Value &v) {
	switch (v.type()) {
	case ValueType::Text: {
		std::string out = "'";
		for (char c : v.as_text()) {
			out += c;
			if (c == '\'') {
				out += '\'';
			}
		}
		return out + "'";
	}
	case ValueType::Float: {
		std::string s = format_double(v.as_float());
		if (s.find_first_of(".eE") == std::string::npos) {
			s += ".0";
		}
		return s;
	}
	default:
		return v.to_text();
	}
}

void print(const Expr &e, std::string &out) {
	std::visit(
	    [&](const auto &n) {
		    using T = std::decay_t<decltype(n)>;
		    if constexpr (std::is_same_v<T, Comparison>) {
			    out += n.column;
			    out += ' ';
			    out += to_string(n.op);
			    out += ' ';
			    out += literal_text(n.literal);
		    } else if constexpr (std::is_same_v<T, NullTest>) {
			    out += n.column;
			    out += n.negated ? " is not null" : " is null";
		    } else if constexpr (std::is_same_v<T, Conjunction> || std::is_same_v<T, Disjunction>) {
			    out += '(';
			    print(*n.lhs, out);
			    out += std::is_same_v<T, Conjunction> ? " and " : " or ";
			    print(*n.rhs, out);
			    out += ')';
		    } else {
			    out += "not ";
			    print(*n.operand, out);
		    }
	    },
	    e.node);
}

void collect_columns(const Expr &e, std::vector<std::string> &out) {
	auto add = [&](const std::string &c) {
		for (const auto &existing : out) {
			if (existing == c) {
				return;
			}
		}
		out.push_back(c);
	};
	std::visit(
	    [&](const auto &n) {
		    using T = std::decay_t<decltype(n)>;
		    if constexpr (std::is_same_v<T, Comparison> || std::is_same_v<T, NullTest>) {
			    add(n.column);
		    } else if constexpr (std::is_same_v<T, Negation>) {
			    collect_columns(*n.operand, out);
		    } else {
			    collect_columns(*n.lhs, out);
			    collect_columns(*n.rhs, out);
		    }
	    },
	    e.node);
}

const Value &column_value(const Schema &schema, const Row &row, const std::string &column) {
	auto idx = schema.index_of(column);
	if (!idx) {
		throw UnknownColumn("", column);
	}
	return row[*idx];
}

bool eval(const Expr &e, const Schema &schema, const Row &row) {
	return std::visit(
	    [&](const auto &n) -> bool {
		    using T = std::decay_t<decltype(n)>;
		    if constexpr (std::is_same_v<T, Comparison>) {
			    auto ord = compare_values(column_value(schema, row, n.column), n.literal);
			    if (!ord) {
				    return false;
			    }
			    switch (n.op) {
			    case CompareOp::Eq:
				    return *ord == 0;
			    case CompareOp::Ne:
				    return *ord != 0;
			    case CompareOp::Lt:
				    return *ord < 0;
			    case CompareOp::Le:
				    return *ord <= 0;
			    case CompareOp::Gt:
				    return *ord > 0;
			    case CompareOp::Ge:
				    return *ord >= 0;
			    }
			    return false;
		    } else if constexpr (std::is_same_v<T, NullTest>) {
			    return column_value(schema, row, n.column).is_null() != n.negated;
		    } else if constexpr (std::is_same_v<T, Conjunction>) {
			    return eval(*n.lhs, schema, row) && eval(*n.rhs, schema, row);
		    } else if constexpr (std::is_same_v<T, Disjunction>) {
			    return eval(*n.lhs, schema, row) || eval(*n.rhs, schema, row);
		    } else {
			    return !eval(*n.operand, schema, row);
		    }
	    },
	    e.node);
}

enum class Tok { Ident, Int, Float, String, LParen, RParen, Cmp, And, Or, Not, Is, Null, True, False, End };

struct Token {
	Tok kind;
	std::size_t pos;
	std::string text;
	Value literal;
	CompareOp op = CompareOp::Eq;
};

class Lexer {
public:
	explicit Lexer(std::string_view src) : src_(src) {
	}

	Token next() {
		while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) {
			pos_++;
		}
		Token t {Tok::End, pos_, {}, {}};
		if (pos_ >= src_.size()) {
			return t;
		}
		char c = src_[pos_];
		if (c == '(') {
			pos_++;
			t.kind = Tok::LParen;
			return t;
		}
		if (c == ')') {
			pos_++;
			t.kind = Tok::RParen;
			return t;
		}
		if (c == '=' || c == '!' || c == '<' || c == '>') {
			return comparison(t);
		}
		if (c == '\'') {
			return string_literal(t);
		}
		if (std::isdigit(static_cast<unsigned char>(c)) ||
		    ((c == '-' || c == '+') && pos_ + 1 < src_.size() &&
		     std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
			return number(t);
		}
		if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
			return word(t);
		}
		throw SyntaxError(1, pos_ + 1, std::string("unexpected character '") + c + "'");
	}

private:
	Token comparison(Token t) {
		char c = src_[pos_];
		bool eq_next = pos_ + 1 < src_.size() && src_[pos_ + 1] == '=';
		t.kind = Tok::Cmp;
		if (c == '=' || c == '!') {
			if (!eq_next) {
				throw SyntaxError(1, pos_ + 1, std::string("incomplete operator '") + c + "'", {"'=='", "'!='"});
			}
			t.op = c == '=' ? CompareOp::Eq : CompareOp::Ne;
			pos_ += 2;
		} else if (c == '<') {
			t.op = eq_next ? CompareOp::Le : CompareOp::Lt;
			pos_ += eq_next ? 2 : 1;
		} else {
			t.op = eq_next ? CompareOp::Ge : CompareOp::Gt;
			pos_ += eq_next ? 2 : 1;
		}
		return t;
	}

	Token string_literal(Token t) {
		std::string value;
		pos_++;
		while (true) {
			if (pos_ >= src_.size()) {
				throw SyntaxError(1, t.pos + 1, "unterminated string literal", {"'"});
			}
			char c = src_[pos_++];
			if (c == '\'') {
				if (pos_ < src_.size() && src_[pos_] == '\'') {
					value += '\'';
					pos_++;
					continue;
				}
				break;
			}
			value += c;
		}
		t.kind = Tok::String;
		t.literal = Value(std::move(value));
		return t;
	}

	Token number(Token t) {
		std::size_t start = pos_;
		if (src_[pos_] == '-' || src_[pos_] == '+') {
			pos_++;
		}
		bool is_float = false;
		auto digits = [&] {
			while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
				pos_++;
			}
		};
		digits();
		if (pos_ < src_.size() && src_[pos_] == '.') {
			is_float = true;
			pos_++;
			if (pos_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
				throw SyntaxError(1, pos_ + 1, "expected digits after decimal point", {"digit"});
			}
			digits();
		}
		if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
			is_float = true;
			pos_++;
			if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) {
				pos_++;
			}
			if (pos_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
				throw SyntaxError(1, pos_ + 1, "expected exponent digits", {"digit"});
			}
			digits();
		}
		std::string_view text = src_.substr(start, pos_ - start);
		// from_chars rejects a leading '+'
		std::string_view parse_text = text.front() == '+' ? text.substr(1) : text;
		const char *first = parse_text.data();
		const char *last = first + parse_text.size();
		if (is_float) {
			double d = 0;
			auto res = std::from_chars(first, last, d);
			if (res.ec != std::errc() || res.ptr != last || !std::isfinite(d)) {
				throw SyntaxError(1, start + 1, "invalid float literal '" + std::string(text) + "'");
			}
			t.kind = Tok::Float;
			t.literal = Value(d);
		} else {
			std::int64_t i = 0;
			auto res = std::from_chars(first, last, i);
			if (res.ec != std::errc() || res.ptr != last) {
				throw SyntaxError(1, start + 1, "integer literal out of range '" + std::string(text) + "'");
			}
			t.kind = Tok::Int;
			t.literal = Value(i);
		}
		return t;
	}

	Token word(Token t) {
		std::size_t start = pos_;
		while (pos_ < src_.size() &&
		       (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
			pos_++;
		}
		t.text = std::string(src_.substr(start, pos_ - start));
		if (t.text == "and") {
			t.kind = Tok::And;
		} else if (t.text == "or") {
			t.kind = Tok::Or;
		} else if (t.text == "not") {
			t.kind = Tok::Not;
		} else if (t.text == "is") {
			t.kind = Tok::Is;
		} else if (t.text == "null") {
			t.kind = Tok::Null;
		} else if (t.text == "true") {
			t.kind = Tok::True;
			t.literal = Value(true);
		} else if (t.text == "false") {
			t.kind = Tok::False;
			t.literal = Value(false);
		} else {
			t.kind = Tok::Ident;
		}
		return t;
	}

	std::string_view src_;
	std::size_t pos_ = 0;
};

class Parser {
public:
	explicit Parser(std::string_view src) : lexer_(src) {
		advance();
	}

	ExprPtr parse() {
		auto e = parse_or();
		if (current_.kind != Tok::End) {
			fail("unexpected token", {"and", "or", "end of input"});
		}
		return e;
	}

private:
	static ExprPtr make(decltype(Expr::node) node) {
		return std::make_shared<const Expr>(Expr {std::move(node)});
	}

	void advance() {
		current_ = lexer_.next();
	}

	[[noreturn]] void fail(const std::string &message, std::vector<std::string> expected) {
		std::string what = message;
		if (current_.kind == Tok::End) {
			what += " at end of input";
		}
		throw SyntaxError(1, current_.pos + 1, what, std::move(expected));
	}

	ExprPtr parse_or() {
		auto lhs = parse_and();
		while (current_.kind == Tok::Or) {
			advance();
			auto rhs = parse_and();
			lhs = make(Disjunction {lhs, rhs});
		}
		return lhs;
	}

	ExprPtr parse_and() {
		auto lhs = parse_unary();
		while (current_.kind == Tok::And) {
			advance();
			auto rhs = parse_unary();
			lhs = make(Conjunction {lhs, rhs});
		}
		return lhs;
	}

	ExprPtr parse_unary() {
		if (current_.kind == Tok::Not) {
			advance();
			return make(Negation {parse_unary()});
		}
		return parse_atom();
	}

	ExprPtr parse_atom() {
		if (current_.kind == Tok::LParen) {
			advance();
			auto inner = parse_or();
			if (current_.kind != Tok::RParen) {
				fail("unbalanced parenthesis", {")", "and", "or"});
			}
			advance();
			return inner;
		}
		if (current_.kind != Tok::Ident) {
			fail("expected a condition", {"not", "(", "identifier"});
		}
		std::string column = current_.text;
		advance();
		if (current_.kind == Tok::Is) {
			advance();
			bool negated = false;
			if (current_.kind == Tok::Not) {
				negated = true;
				advance();
			}
			if (current_.kind != Tok::Null) {
				fail("expected null test", negated ? std::vector<std::string> {"null"}
				                                   : std::vector<std::string> {"not", "null"});
			}
			advance();
			return make(NullTest {std::move(column), negated});
		}
		if (current_.kind != Tok::Cmp) {
			fail("expected comparison", {"==", "!=", "<", "<=", ">", ">=", "is"});
		}
		CompareOp op = current_.op;
		advance();
		switch (current_.kind) {
		case Tok::Int:
		case Tok::Float:
		case Tok::String:
		case Tok::True:
		case Tok::False: {
			Value literal = current_.literal;
			advance();
			return make(Comparison {std::move(column), op, std::move(literal)});
		}
		default:
			fail("expected literal", {"literal"});
		}
	}

	Lexer lexer_;
	Token current_ {Tok::End, 0, {}, {}};
};

void tree(const Expr &e, std::string &out) {
	std::visit(
	    [&](const auto &n) {
		    using T = std::decay_t<decltype(n)>;
		    if constexpr (std::is_same_v<T, Comparison>) {
			    out += "Cmp(" + n.column + " " + std::string(to_string(n.op)) + " " + literal_text(n.literal) + ")";
		    } else if constexpr (std::is_same_v<T, NullTest>) {
			    out += (n.negated ? "IsNotNull(" : "IsNull(") + n.column + ")";
		    } else if constexpr (std::is_same_v<T, Negation>) {
			    out += "Not(";
			    tree(*n.operand, out);
			    out += ")";
		    } else {
			    out += std::is_same_v<T, Conjunction> ? "And(" : "Or(";
			    tree(*n.lhs, out);
			    out += ", ";
			    tree(*n.rhs, out);
			    out += ")";
		    }
	    },
	    e.node);
}

} // namespace

std::string Predicate::to_string() const {
	std::string out;
	if (root_) {
		print(*root_, out);
	}
	return out;
}

std::vector<std::string> Predicate::columns() const {
	std::vector<std::string> out;
	if (root_) {
		collect_columns(*root_, out);
	}
	return out;
}

bool Predicate::evaluate(const Schema &schema, const Row &row) const {
	return root_ ? eval(*root_, schema, row) : true;
}

Predicate parse_predicate(std::string_view src) {
	return Predicate(Parser(src).parse());
}

std::string debug_tree(const Expr &expr) {
	std::string out;
	tree(expr, out);
	return out;
}

} // namespace pipelens
