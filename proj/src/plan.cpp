#include "pipelens/plan.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace pipelens {

namespace {

constexpr OpKind kAllKinds[] = {OpKind::DataSource,   OpKind::Selection,    OpKind::Projection, OpKind::ExtendedProjection,
                                OpKind::Join,         OpKind::Concat,       OpKind::Split,      OpKind::Corruption,
                                OpKind::EstimatorFit, OpKind::Transform,    OpKind::LabelExtract, OpKind::TrainModel,
                                OpKind::Predict,      OpKind::Score};

} // namespace

std::string_view to_string(OpKind kind) {
	switch (kind) {
	case OpKind::DataSource:
		return "DataSource";
	case OpKind::Selection:
		return "Selection";
	case OpKind::Projection:
		return "Projection";
	case OpKind::ExtendedProjection:
		return "ExtendedProjection";
	case OpKind::Join:
		return "Join";
	case OpKind::Concat:
		return "Concat";
	case OpKind::Split:
		return "Split";
	case OpKind::Corruption:
		return "Corruption";
	case OpKind::EstimatorFit:
		return "EstimatorFit";
	case OpKind::Transform:
		return "Transform";
	case OpKind::LabelExtract:
		return "LabelExtract";
	case OpKind::TrainModel:
		return "TrainModel";
	case OpKind::Predict:
		return "Predict";
	case OpKind::Score:
		return "Score";
	}
	return "?";
}

std::optional<OpKind> op_kind_from_string(std::string_view name) {
	for (auto k : kAllKinds) {
		if (to_string(k) == name) {
			return k;
		}
	}
	return std::nullopt;
}

std::string_view to_string(Port port) {
	switch (port) {
	case Port::Out:
		return "out";
	case Port::Train:
		return "train";
	case Port::Test:
		return "test";
	}
	return "?";
}

std::string Edge::to_string() const {
	if (port == Port::Out) {
		return node;
	}
	return node + "#" + std::string(pipelens::to_string(port));
}

std::string_view to_string(DatumKind kind) {
	switch (kind) {
	case DatumKind::Relation:
		return "relation";
	case DatumKind::Stats:
		return "fitted statistics";
	case DatumKind::Matrix:
		return "feature matrix";
	case DatumKind::Labels:
		return "label vector";
	case DatumKind::Model:
		return "model";
	case DatumKind::Predictions:
		return "predictions";
	case DatumKind::Report:
		return "score report";
	}
	return "?";
}

//===--------------------------------------------------------------------===//
// Plan
//===--------------------------------------------------------------------===//

void Plan::add_node(PlanNode node) {
	std::string id = node.id;
	if (!nodes_.emplace(id, std::move(node)).second) {
		throw Error("duplicate node id '" + id + "'");
	}
}

void Plan::remove_node(const std::string &id) {
	nodes_.erase(id);
	sinks_.erase(std::remove(sinks_.begin(), sinks_.end(), id), sinks_.end());
}

bool Plan::contains(std::string_view id) const {
	return nodes_.find(id) != nodes_.end();
}

const PlanNode &Plan::node(std::string_view id) const {
	auto it = nodes_.find(id);
	if (it == nodes_.end()) {
		throw Error("no node '" + std::string(id) + "' in plan");
	}
	return it->second;
}

PlanNode &Plan::node(std::string_view id) {
	auto it = nodes_.find(id);
	if (it == nodes_.end()) {
		throw Error("no node '" + std::string(id) + "' in plan");
	}
	return it->second;
}

std::vector<std::string> Plan::sinks() const {
	if (!sinks_.empty()) {
		return sinks_;
	}
	std::set<std::string> consumed;
	for (const auto &[id, n] : nodes_) {
		for (const auto &e : n.inputs) {
			consumed.insert(e.node);
		}
	}
	std::vector<std::string> out;
	for (const auto &[id, n] : nodes_) {
		if (!consumed.count(id)) {
			out.push_back(id);
		}
	}
	return out;
}

std::vector<std::string> Plan::consumers(std::string_view id) const {
	std::vector<std::string> out;
	for (const auto &[nid, n] : nodes_) {
		for (const auto &e : n.inputs) {
			if (e.node == id) {
				out.push_back(nid);
				break;
			}
		}
	}
	return out;
}

void Plan::replace_edges(const Edge &from, const Edge &to) {
	for (auto &[id, n] : nodes_) {
		for (auto &e : n.inputs) {
			if (e == from) {
				e = to;
			}
		}
	}
}

//===--------------------------------------------------------------------===//
// Schema inference
//===--------------------------------------------------------------------===//

namespace {

struct NodeInfo {
	DatumKind kind = DatumKind::Relation;
	//! nullopt when an upstream source is unbound.
	std::optional<Schema> schema;
};

struct ArityRule {
	std::size_t min;
	std::size_t max;
};

ArityRule arity(OpKind kind) {
	switch (kind) {
	case OpKind::DataSource:
		return {0, 0};
	case OpKind::Join:
	case OpKind::Transform:
	case OpKind::TrainModel:
	case OpKind::Predict:
	case OpKind::Score:
		return {2, 2};
	case OpKind::Concat:
		return {1, SIZE_MAX};
	default:
		return {1, 1};
	}
}

bool params_match_kind(const PlanNode &n) {
	switch (n.kind) {
	case OpKind::DataSource:
		return std::holds_alternative<DataSourceParams>(n.params);
	case OpKind::Selection:
		return std::holds_alternative<SelectionParams>(n.params);
	case OpKind::Projection:
		return std::holds_alternative<ProjectionParams>(n.params);
	case OpKind::ExtendedProjection:
		return std::holds_alternative<ExtendedProjectionParams>(n.params);
	case OpKind::Join:
		return std::holds_alternative<JoinParams>(n.params);
	case OpKind::Concat:
	case OpKind::Predict:
		return std::holds_alternative<std::monostate>(n.params);
	case OpKind::Split:
		return std::holds_alternative<SplitParams>(n.params);
	case OpKind::Corruption:
		return std::holds_alternative<CorruptionParams>(n.params);
	case OpKind::EstimatorFit:
	case OpKind::Transform:
		return std::holds_alternative<EncoderParams>(n.params);
	case OpKind::LabelExtract:
		return std::holds_alternative<LabelParams>(n.params);
	case OpKind::TrainModel:
		return std::holds_alternative<ModelConfig>(n.params);
	case OpKind::Score:
		return std::holds_alternative<ScoreParams>(n.params);
	}
	return false;
}

bool comparable(ValueType a, ValueType b) {
	return (is_numeric(a) && is_numeric(b)) || a == b;
}

const Column &require_column(const PlanNode &node, const Schema &schema, const std::string &column) {
	auto idx = schema.index_of(column);
	if (!idx) {
		throw UnknownColumn(node.id, column);
	}
	return schema[*idx];
}

void check_predicate(const PlanNode &node, const Schema &schema, const Expr &expr) {
	std::visit(
	    [&](const auto &n) {
		    using T = std::decay_t<decltype(n)>;
		    if constexpr (std::is_same_v<T, Comparison>) {
			    const auto &col = require_column(node, schema, n.column);
			    if (!comparable(col.type, n.literal.type())) {
				    throw Error("cannot compare column '" + n.column + "' (" + std::string(to_string(col.type)) +
				                ") with a " + std::string(to_string(n.literal.type())) + " literal");
			    }
		    } else if constexpr (std::is_same_v<T, NullTest>) {
			    require_column(node, schema, n.column);
		    } else if constexpr (std::is_same_v<T, Negation>) {
			    check_predicate(node, schema, *n.operand);
		    } else {
			    check_predicate(node, schema, *n.lhs);
			    check_predicate(node, schema, *n.rhs);
		    }
	    },
	    expr.node);
}

void expect_kind(const PlanNode &node, std::size_t i, DatumKind actual, DatumKind expected) {
	if (actual != expected) {
		throw Error("input " + std::to_string(i) + " ('" + node.inputs[i].to_string() + "') is a " +
		            std::string(to_string(actual)) + ", expected a " + std::string(to_string(expected)));
	}
}

//! Infers one node from its already-inferred inputs. Throws UnknownColumn or Error.
NodeInfo infer_node(const Plan &plan, const PlanNode &node, const std::vector<const NodeInfo *> &in) {
	auto all_known = [&] {
		for (const auto *i : in) {
			if (!i->schema) {
				return false;
			}
		}
		return true;
	};
	auto relational = [&](std::size_t from) {
		for (std::size_t i = from; i < in.size(); i++) {
			expect_kind(node, i, in[i]->kind, DatumKind::Relation);
		}
	};

	NodeInfo out;
	switch (node.kind) {
	case OpKind::DataSource:
		out.kind = DatumKind::Relation;
		out.schema = node.get<DataSourceParams>().schema;
		return out;
	case OpKind::Selection:
		relational(0);
		out.schema = in[0]->schema;
		if (out.schema) {
			check_predicate(node, *out.schema, node.get<SelectionParams>().predicate.root());
		}
		return out;
	case OpKind::Projection: {
		relational(0);
		if (!all_known()) {
			return out;
		}
		std::vector<Column> cols;
		for (const auto &c : node.get<ProjectionParams>().columns) {
			cols.push_back(require_column(node, *in[0]->schema, c));
		}
		out.schema = Schema(std::move(cols));
		return out;
	}
	case OpKind::ExtendedProjection: {
		relational(0);
		if (!all_known()) {
			return out;
		}
		const auto &p = node.get<ExtendedProjectionParams>();
		check_predicate(node, *in[0]->schema, p.expr.root());
		if (in[0]->schema->contains(p.output)) {
			throw Error("output column '" + p.output + "' already exists");
		}
		auto cols = in[0]->schema->columns();
		cols.push_back({p.output, ValueType::Bool});
		out.schema = Schema(std::move(cols));
		return out;
	}
	case OpKind::Join: {
		relational(0);
		if (!all_known()) {
			return out;
		}
		const auto &key = node.get<JoinParams>().on;
		const auto &lk = require_column(node, *in[0]->schema, key);
		const auto &rk = require_column(node, *in[1]->schema, key);
		if (!comparable(lk.type, rk.type)) {
			throw Error("join key '" + key + "' has incompatible types " + std::string(to_string(lk.type)) + " and " +
			            std::string(to_string(rk.type)));
		}
		out.schema = join_schema(*in[0]->schema, *in[1]->schema, key);
		return out;
	}
	case OpKind::Concat: {
		out.kind = in[0]->kind;
		if (out.kind != DatumKind::Relation && out.kind != DatumKind::Matrix) {
			throw Error("concat inputs must be relations or feature matrices, got a " +
			            std::string(to_string(out.kind)));
		}
		for (std::size_t i = 1; i < in.size(); i++) {
			expect_kind(node, i, in[i]->kind, out.kind);
		}
		if (!all_known()) {
			return out;
		}
		std::vector<Schema> schemas;
		for (const auto *i : in) {
			schemas.push_back(*i->schema);
		}
		out.schema = concat_schema(schemas);
		return out;
	}
	case OpKind::Split:
		relational(0);
		out.schema = in[0]->schema;
		return out;
	case OpKind::Corruption: {
		relational(0);
		out.schema = in[0]->schema;
		if (out.schema) {
			const auto &p = node.get<CorruptionParams>();
			const auto &col = require_column(node, *out.schema, p.column);
			if (p.kind == CorruptionKind::Outliers && !is_numeric(col.type)) {
				throw Error("outlier corruption needs a numeric column, '" + p.column + "' is " +
				            std::string(to_string(col.type)));
			}
			if (p.kind == CorruptionKind::CategorySwap && col.type != ValueType::Text) {
				throw Error("category swap needs a text column, '" + p.column + "' is " +
				            std::string(to_string(col.type)));
			}
		}
		return out;
	}
	case OpKind::EstimatorFit:
		relational(0);
		out.kind = DatumKind::Stats;
		if (in[0]->schema) {
			require_column(node, *in[0]->schema, node.get<EncoderParams>().column);
			out.schema = Schema();
		}
		return out;
	case OpKind::Transform: {
		expect_kind(node, 0, in[0]->kind, DatumKind::Stats);
		relational(1);
		out.kind = DatumKind::Matrix;
		const auto &p = node.get<EncoderParams>();
		const auto &fit = plan.node(node.inputs[0].node);
		if (fit.kind != OpKind::EstimatorFit || fit.get<EncoderParams>().column != p.column ||
		    fit.get<EncoderParams>().encoder != p.encoder) {
			throw Error("transform does not match the estimator '" + fit.id + "' it reads");
		}
		if (in[1]->schema) {
			require_column(node, *in[1]->schema, p.column);
			std::string name = p.feature + (p.encoder == Encoder::OneHot ? "__f*" : "__f0");
			out.schema = Schema({{name, ValueType::Float}});
		}
		return out;
	}
	case OpKind::LabelExtract: {
		relational(0);
		out.kind = DatumKind::Labels;
		if (in[0]->schema) {
			const auto &p = node.get<LabelParams>();
			require_column(node, *in[0]->schema, p.column);
			if (p.group_column) {
				require_column(node, *in[0]->schema, *p.group_column);
			}
			out.schema = Schema({{"label", ValueType::Float}});
		}
		return out;
	}
	case OpKind::TrainModel:
		expect_kind(node, 0, in[0]->kind, DatumKind::Matrix);
		expect_kind(node, 1, in[1]->kind, DatumKind::Labels);
		out.kind = DatumKind::Model;
		if (all_known()) {
			out.schema = Schema();
		}
		return out;
	case OpKind::Predict:
		expect_kind(node, 0, in[0]->kind, DatumKind::Model);
		expect_kind(node, 1, in[1]->kind, DatumKind::Matrix);
		out.kind = DatumKind::Predictions;
		if (all_known()) {
			out.schema = Schema({{"probability", ValueType::Float}});
		}
		return out;
	case OpKind::Score: {
		expect_kind(node, 0, in[0]->kind, DatumKind::Predictions);
		expect_kind(node, 1, in[1]->kind, DatumKind::Labels);
		out.kind = DatumKind::Report;
		if (all_known()) {
			std::vector<Column> cols;
			for (const auto &m : node.get<ScoreParams>().metrics) {
				cols.push_back({m, ValueType::Float});
			}
			out.schema = Schema(std::move(cols));
		}
		return out;
	}
	}
	return out;
}

//! Cycles among existing edges, each rendered in dataflow direction starting at its smallest id.
std::vector<std::vector<std::string>> find_cycles(const Plan &plan) {
	enum class Color { White, Gray, Black };
	std::map<std::string, Color, std::less<>> color;
	for (const auto &[id, n] : plan.nodes()) {
		color[id] = Color::White;
	}
	std::vector<std::vector<std::string>> cycles;
	std::set<std::set<std::string>> seen;
	std::vector<std::string> stack;

	std::function<void(const std::string &)> visit = [&](const std::string &id) {
		color[id] = Color::Gray;
		stack.push_back(id);
		for (const auto &e : plan.node(id).inputs) {
			auto it = color.find(e.node);
			if (it == color.end()) {
				continue;
			}
			if (it->second == Color::Gray) {
				auto start = std::find(stack.begin(), stack.end(), e.node);
				std::vector<std::string> cycle(start, stack.end());
				// stack follows input edges; flip to dataflow order
				std::reverse(cycle.begin(), cycle.end());
				auto min_it = std::min_element(cycle.begin(), cycle.end());
				std::rotate(cycle.begin(), min_it, cycle.end());
				std::set<std::string> key(cycle.begin(), cycle.end());
				if (seen.insert(key).second) {
					cycles.push_back(std::move(cycle));
				}
			} else if (it->second == Color::White) {
				visit(e.node);
			}
		}
		stack.pop_back();
		color[id] = Color::Black;
	};
	for (const auto &[id, n] : plan.nodes()) {
		if (color[id] == Color::White) {
			visit(id);
		}
	}
	return cycles;
}

} // namespace

Schema join_schema(const Schema &left, const Schema &right, const std::string &key) {
	std::vector<Column> cols;
	for (const auto &c : left.columns()) {
		Column out = c;
		if (c.name != key && right.contains(c.name)) {
			out.name += "_l";
		}
		cols.push_back(std::move(out));
	}
	for (const auto &c : right.columns()) {
		if (c.name == key) {
			continue;
		}
		Column out = c;
		if (left.contains(c.name)) {
			out.name += "_r";
		}
		cols.push_back(std::move(out));
	}
	return Schema(std::move(cols));
}

Schema concat_schema(const std::vector<Schema> &inputs) {
	std::vector<Column> cols;
	std::set<std::string> names;
	for (const auto &s : inputs) {
		for (const auto &c : s.columns()) {
			if (!names.insert(c.name).second) {
				throw Error("duplicate column '" + c.name + "' in concat inputs");
			}
			cols.push_back(c);
		}
	}
	return Schema(std::move(cols));
}

std::vector<Diagnostic> validate(const Plan &plan) {
	std::vector<Diagnostic> diags;
	bool structural_ok = true;

	for (const auto &[id, node] : plan.nodes()) {
		if (node.id != id) {
			diags.push_back({id, "node is stored under id '" + id + "' but names itself '" + node.id + "'"});
			structural_ok = false;
		}
		if (!params_match_kind(node)) {
			diags.push_back({id, "parameters do not match operator " + std::string(to_string(node.kind))});
			structural_ok = false;
		}
		auto rule = arity(node.kind);
		if (node.inputs.size() < rule.min || node.inputs.size() > rule.max) {
			std::string expected = rule.min == rule.max ? std::to_string(rule.min)
			                                            : "at least " + std::to_string(rule.min);
			diags.push_back({id, std::string(to_string(node.kind)) + " expects " + expected + " input(s), has " +
			                         std::to_string(node.inputs.size())});
			structural_ok = false;
		}
		for (const auto &e : node.inputs) {
			if (!plan.contains(e.node)) {
				diags.push_back({id, "input '" + e.node + "' does not exist"});
				structural_ok = false;
				continue;
			}
			bool from_split = plan.node(e.node).kind == OpKind::Split;
			if (from_split && e.port == Port::Out) {
				diags.push_back({id, "edge from split '" + e.node + "' must select the train or test side"});
				structural_ok = false;
			} else if (!from_split && e.port != Port::Out) {
				diags.push_back({id, "edge from '" + e.node + "' selects a split side but it is not a split"});
				structural_ok = false;
			}
		}
	}
	for (const auto &s : plan.declared_sinks()) {
		if (!plan.contains(s)) {
			diags.push_back({"", "sink '" + s + "' does not exist"});
			structural_ok = false;
		}
	}

	auto cycles = find_cycles(plan);
	for (const auto &cycle : cycles) {
		std::string msg = "cycle detected: ";
		for (const auto &id : cycle) {
			msg += id + " -> ";
		}
		msg += cycle.front();
		diags.push_back({cycle.front(), msg});
	}
	if (!cycles.empty()) {
		return diags;
	}

	// every node must feed some sink
	std::set<std::string> reached;
	std::vector<std::string> work;
	for (const auto &s : plan.sinks()) {
		if (plan.contains(s) && reached.insert(s).second) {
			work.push_back(s);
		}
	}
	while (!work.empty()) {
		auto id = work.back();
		work.pop_back();
		for (const auto &e : plan.node(id).inputs) {
			if (plan.contains(e.node) && reached.insert(e.node).second) {
				work.push_back(e.node);
			}
		}
	}
	for (const auto &[id, node] : plan.nodes()) {
		if (!reached.count(id)) {
			diags.push_back({id, "node is not reachable from any sink"});
		}
	}

	if (!structural_ok) {
		return diags;
	}

	std::map<std::string, NodeInfo, std::less<>> info;
	std::set<std::string> failed;
	for (const auto &id : topological_order(plan)) {
		const auto &node = plan.node(id);
		std::vector<const NodeInfo *> in;
		bool upstream_failed = false;
		for (const auto &e : node.inputs) {
			if (failed.count(e.node)) {
				upstream_failed = true;
				break;
			}
			in.push_back(&info.at(e.node));
		}
		if (upstream_failed) {
			failed.insert(id);
			continue;
		}
		try {
			info[id] = infer_node(plan, node, in);
		} catch (const UnknownColumn &e) {
			diags.push_back({id, "unknown column '" + e.column + "'"});
			failed.insert(id);
		} catch (const Error &e) {
			diags.push_back({id, e.what()});
			failed.insert(id);
		}
	}
	return diags;
}

std::vector<std::string> topological_order(const Plan &plan) {
	std::map<std::string, std::size_t, std::less<>> pending;
	std::map<std::string, std::vector<std::string>, std::less<>> consumers;
	for (const auto &[id, n] : plan.nodes()) {
		std::set<std::string> distinct;
		for (const auto &e : n.inputs) {
			if (plan.contains(e.node)) {
				distinct.insert(e.node);
			}
		}
		pending[id] = distinct.size();
		for (const auto &d : distinct) {
			consumers[d].push_back(id);
		}
	}
	std::set<std::string> ready;
	for (const auto &[id, count] : pending) {
		if (count == 0) {
			ready.insert(id);
		}
	}
	std::vector<std::string> order;
	while (!ready.empty()) {
		auto id = *ready.begin();
		ready.erase(ready.begin());
		order.push_back(id);
		for (const auto &c : consumers[id]) {
			if (--pending[c] == 0) {
				ready.insert(c);
			}
		}
	}
	if (order.size() != plan.size()) {
		std::vector<Diagnostic> diags;
		for (const auto &cycle : find_cycles(plan)) {
			diags.push_back({cycle.front(), "cycle detected"});
		}
		throw InvalidPlan(std::move(diags));
	}
	return order;
}

Schema infer_schema(const Plan &plan, std::string_view node_id) {
	std::map<std::string, NodeInfo, std::less<>> memo;
	std::set<std::string, std::less<>> visiting;

	std::function<const NodeInfo &(std::string_view)> resolve = [&](std::string_view id) -> const NodeInfo & {
		if (auto it = memo.find(id); it != memo.end()) {
			return it->second;
		}
		if (!plan.contains(id)) {
			throw InvalidPlan({{std::string(id), "node does not exist"}});
		}
		if (!visiting.insert(std::string(id)).second) {
			throw InvalidPlan({{std::string(id), "cycle detected"}});
		}
		const auto &node = plan.node(id);
		if (!params_match_kind(node)) {
			throw InvalidPlan({{node.id, "parameters do not match operator"}});
		}
		std::vector<const NodeInfo *> in;
		for (const auto &e : node.inputs) {
			in.push_back(&resolve(e.node));
		}
		auto rule = arity(node.kind);
		if (in.size() < rule.min || in.size() > rule.max) {
			throw InvalidPlan({{node.id, "wrong number of inputs"}});
		}
		NodeInfo result;
		try {
			result = infer_node(plan, node, in);
		} catch (const UnknownColumn &) {
			throw;
		} catch (const Error &e) {
			throw InvalidPlan({{node.id, e.what()}});
		}
		visiting.erase(node.id);
		return memo.emplace(node.id, std::move(result)).first->second;
	};

	const auto &result = resolve(node_id);
	if (!result.schema) {
		throw InvalidPlan({{std::string(node_id), "schema depends on an unbound data source"}});
	}
	return *result.schema;
}

namespace {

std::string dot_quote(const std::string &s) {
	std::string out = "\"";
	for (char c : s) {
		if (c == '"' || c == '\\') {
			out += '\\';
		}
		out += c;
	}
	return out + "\"";
}

} // namespace

std::string to_dot(const Plan &plan) {
	std::ostringstream out;
	out << "digraph {\n";
	for (const auto &[id, n] : plan.nodes()) {
		std::string label = dot_quote(id);
		label.pop_back();
		out << "  " << dot_quote(id) << " [label=" << label << "\\n" << to_string(n.kind) << "\"];\n";
	}
	for (const auto &[id, n] : plan.nodes()) {
		for (const auto &e : n.inputs) {
			out << "  " << dot_quote(e.node) << " -> " << dot_quote(id);
			if (e.port != Port::Out) {
				out << " [label=\"" << to_string(e.port) << "\"]";
			}
			out << ";\n";
		}
	}
	out << "}\n";
	return out.str();
}

nlohmann::json params_to_json(const PlanNode &node) {
	nlohmann::json j = nlohmann::json::object();
	std::visit(
	    [&](const auto &p) {
		    using T = std::decay_t<decltype(p)>;
		    if constexpr (std::is_same_v<T, DataSourceParams>) {
			    j["dataset"] = p.dataset;
			    j["path"] = p.path;
		    } else if constexpr (std::is_same_v<T, SelectionParams>) {
			    j["predicate"] = p.predicate.to_string();
		    } else if constexpr (std::is_same_v<T, ProjectionParams>) {
			    j["columns"] = p.columns;
		    } else if constexpr (std::is_same_v<T, ExtendedProjectionParams>) {
			    j["output"] = p.output;
			    j["expr"] = p.expr.to_string();
		    } else if constexpr (std::is_same_v<T, JoinParams>) {
			    j["on"] = p.on;
		    } else if constexpr (std::is_same_v<T, SplitParams>) {
			    j["test_fraction"] = p.test_fraction;
			    j["seed"] = p.seed;
		    } else if constexpr (std::is_same_v<T, CorruptionParams>) {
			    j["dataset"] = p.dataset;
			    j["column"] = p.column;
			    j["kind"] = std::string(to_string(p.kind));
			    j["fraction"] = p.fraction;
			    j["factor"] = p.factor;
			    j["seed"] = p.seed;
			    j["branch"] = std::string(to_string(p.branch));
		    } else if constexpr (std::is_same_v<T, EncoderParams>) {
			    j["feature"] = p.feature;
			    j["column"] = p.column;
			    j["encoder"] = std::string(to_string(p.encoder));
		    } else if constexpr (std::is_same_v<T, LabelParams>) {
			    j["column"] = p.column;
			    j["positive"] = p.positive;
			    if (p.group_column) {
				    j["group_column"] = *p.group_column;
			    }
		    } else if constexpr (std::is_same_v<T, ModelConfig>) {
			    j = to_json(p);
		    } else if constexpr (std::is_same_v<T, ScoreParams>) {
			    j["metrics"] = p.metrics;
			    if (p.privileged) {
				    j["privileged"] = *p.privileged;
			    }
		    }
	    },
	    node.params);
	return j;
}

} // namespace pipelens
