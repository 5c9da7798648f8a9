#pragma once

#include "pipelens/corruption.hpp"
#include "pipelens/errors.hpp"
#include "pipelens/featurize.hpp"
#include "pipelens/models.hpp"
#include "pipelens/predicate.hpp"
#include "pipelens/relation.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pipelens {

enum class OpKind {
	DataSource,
	Selection,
	Projection,
	ExtendedProjection,
	Join,
	Concat,
	Split,
	Corruption,
	EstimatorFit,
	Transform,
	LabelExtract,
	TrainModel,
	Predict,
	Score
};

std::string_view to_string(OpKind kind);
std::optional<OpKind> op_kind_from_string(std::string_view name);

//! Split produces two outputs; edges leaving a Split name the side they read.
enum class Port : std::uint8_t { Out, Train, Test };

std::string_view to_string(Port port);

struct Edge {
	std::string node;
	Port port = Port::Out;

	bool operator==(const Edge &) const = default;
	//! "node" or "node#train" / "node#test".
	std::string to_string() const;
};

struct DataSourceParams {
	std::string dataset;
	std::string path;
	//! Known once the source is bound to data; schema checks downstream of an
	//! unbound source are skipped by validate().
	std::optional<Schema> schema;

	bool operator==(const DataSourceParams &) const = default;
};

struct SelectionParams {
	Predicate predicate;
	bool operator==(const SelectionParams &) const = default;
};

struct ProjectionParams {
	std::vector<std::string> columns;
	bool operator==(const ProjectionParams &) const = default;
};

//! Appends a Bool column computed from a predicate.
struct ExtendedProjectionParams {
	std::string output;
	Predicate expr;
	bool operator==(const ExtendedProjectionParams &) const = default;
};

//! Inner equi-join on a column both sides share.
struct JoinParams {
	std::string on;
	bool operator==(const JoinParams &) const = default;
};

struct SplitParams {
	double test_fraction = 0.2;
	std::uint64_t seed = 0;
	bool operator==(const SplitParams &) const = default;
};

struct CorruptionParams {
	std::string dataset;
	std::string column;
	CorruptionKind kind = CorruptionKind::MissingValues;
	double fraction = 0.0;
	double factor = 1.0;
	std::uint64_t seed = 0;
	Branch branch = Branch::Test;
	bool operator==(const CorruptionParams &) const = default;
};

//! Shared by EstimatorFit and Transform. `feature` names the featurize entry
//! (the column, or `<column>#<k>` for repeated encodings of one column).
struct EncoderParams {
	std::string feature;
	std::string column;
	Encoder encoder = Encoder::OneHot;
	bool operator==(const EncoderParams &) const = default;
};

struct LabelParams {
	std::string column;
	std::string positive;
	std::optional<std::string> group_column;
	bool operator==(const LabelParams &) const = default;
};

struct ScoreParams {
	std::vector<std::string> metrics;
	std::optional<std::string> privileged;
	bool operator==(const ScoreParams &) const = default;
};

using NodeParams = std::variant<std::monostate, DataSourceParams, SelectionParams, ProjectionParams,
                                ExtendedProjectionParams, JoinParams, SplitParams, CorruptionParams, EncoderParams,
                                LabelParams, ModelConfig, ScoreParams>;

struct PlanNode {
	std::string id;
	OpKind kind = OpKind::DataSource;
	NodeParams params;
	std::vector<Edge> inputs;

	template <class T>
	const T &get() const {
		return std::get<T>(params);
	}
	template <class T>
	T &get() {
		return std::get<T>(params);
	}

	bool operator==(const PlanNode &) const = default;
};

//! A logical query plan: operator vertices keyed by id, edges stored as each
//! node's ordered inputs. Immutable once built and shared across threads.
class Plan {
public:
	//! Throws pipelens::Error on a duplicate id.
	void add_node(PlanNode node);
	void remove_node(const std::string &id);
	bool contains(std::string_view id) const;
	const PlanNode &node(std::string_view id) const;
	PlanNode &node(std::string_view id);

	const std::map<std::string, PlanNode, std::less<>> &nodes() const {
		return nodes_;
	}
	std::size_t size() const {
		return nodes_.size();
	}
	bool empty() const {
		return nodes_.empty();
	}

	//! Explicit sinks if set, otherwise every node without consumers.
	std::vector<std::string> sinks() const;
	void set_sinks(std::vector<std::string> sinks) {
		sinks_ = std::move(sinks);
	}
	const std::vector<std::string> &declared_sinks() const {
		return sinks_;
	}

	//! Ids of nodes with at least one edge from `id`, ascending.
	std::vector<std::string> consumers(std::string_view id) const;
	//! Redirects every edge reading `from` to read `to` instead.
	void replace_edges(const Edge &from, const Edge &to);

	bool operator==(const Plan &) const = default;

private:
	std::map<std::string, PlanNode, std::less<>> nodes_;
	std::vector<std::string> sinks_;
};

//! What a node's output holds at run time.
enum class DatumKind { Relation, Stats, Matrix, Labels, Model, Predictions, Report };

std::string_view to_string(DatumKind kind);

//! Structural and schema checks. Empty iff the plan is acyclic, every edge
//! resolves with the right arity, port and input kind, every node reaches a
//! sink, and schemas infer end-to-end from the bound sources.
std::vector<Diagnostic> validate(const Plan &plan);

//! Kahn order with lexicographic tie-breaking. Throws InvalidPlan on a cycle.
std::vector<std::string> topological_order(const Plan &plan);

//! Output schema of a node. Matrix-producing nodes report their feature
//! columns; a one-hot Transform, whose width depends on the fitted
//! categories, reports a single `<feature>__f*` placeholder. Throws
//! UnknownColumn, or InvalidPlan when the plan is malformed or an upstream
//! source is unbound.
Schema infer_schema(const Plan &plan, std::string_view node_id);

//! Left columns then right columns minus the key; other names present on
//! both sides get `_l` / `_r` suffixes.
Schema join_schema(const Schema &left, const Schema &right, const std::string &key);

//! Columns of all inputs in order. Throws pipelens::Error on a repeated name.
Schema concat_schema(const std::vector<Schema> &inputs);

//! GraphViz rendering, nodes and edges in id order.
std::string to_dot(const Plan &plan);

//! Parameters as JSON with sorted keys; predicates in canonical text.
nlohmann::json params_to_json(const PlanNode &node);

} // namespace pipelens
