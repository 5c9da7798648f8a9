#pragma once

#include "pipelens/datum.hpp"
#include "pipelens/plan.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <span>
#include <string>
#include <vector>

namespace pipelens {

//! What an inspection sees of one operator evaluation. `slot` is the index of
//! the inspection's own annotation slot in every AnnotationTable.
struct Observation {
	const PlanNode &node;
	std::size_t slot;
	std::vector<const Datum *> inputs;
	const Datum &output;
	//! The test side of a Split; nullptr for every other operator.
	const Datum *test_output = nullptr;
};

//! Pluggable observer. The executor gives every row one annotation slot per
//! active inspection, seeds it at the sources, carries it through operators
//! with propagate(), and calls observe() once per evaluated node.
class Inspection {
public:
	virtual ~Inspection() = default;

	virtual std::string name() const = 0;
	//! Annotation of row `row` of a freshly loaded source relation.
	virtual Annotation annotate_source(const Relation &source, std::size_t row) = 0;
	//! Annotation of an output row derived from the given input rows (one
	//! for copy operators, two for a join, one per input for a concat).
	virtual Annotation propagate(OpKind op, std::span<const Annotation *const> sources) = 0;
	//! Annotation summarizing a global aggregation over all `rows`.
	virtual Annotation summarize(OpKind op, std::span<const Annotation *const> rows) = 0;
	virtual void observe(const Observation &observation) = 0;
	virtual nlohmann::json result() const = 0;
};

//! Above this many tokens, aggregate lineage is kept as a LineageDigest.
inline constexpr std::size_t kLineageDigestThreshold = 10000;

//! Per-row why-provenance: the set of source row ids each row derives from.
class LineageInspection : public Inspection {
public:
	std::string name() const override {
		return "lineage";
	}
	Annotation annotate_source(const Relation &source, std::size_t row) override;
	Annotation propagate(OpKind op, std::span<const Annotation *const> sources) override;
	Annotation summarize(OpKind op, std::span<const Annotation *const> rows) override;
	void observe(const Observation &observation) override;
	//! {node: {row_index: [[source, index], ...]}} for relation-producing nodes.
	nlohmann::json result() const override;

	//! Lineage of every output row of a node; empty when it was not observed.
	const std::vector<LineageSet> &lineage(const std::string &node) const;
	//! Summary annotation recorded for an EstimatorFit or TrainModel node.
	const Annotation *summary(const std::string &node) const;
	//! Node ids whose output is a Relation, in observation order.
	const std::vector<std::string> &relational_nodes() const {
		return relational_;
	}

private:
	std::map<std::string, std::vector<LineageSet>> per_node_;
	std::map<std::string, Annotation> summaries_;
	std::vector<std::string> relational_;
};

using GroupHistogram = std::map<Value, std::size_t, ValueLess>;

struct NodeHistograms {
	std::string node;
	OpKind kind = OpKind::Selection;
	GroupHistogram input;
	GroupHistogram output;
};

struct DistributionFinding {
	std::string node;
	Value group;
	double proportion_before = 0.0;
	double proportion_after = 0.0;
	//! after / before; +infinity when the group is new after the operator.
	double ratio = 0.0;
	bool flagged = false;
};

inline constexpr double kDefaultTau = 0.8;

//! Tracks the sensitive group of each row and records, for relational
//! operators and Transforms, the group histogram of the input and output.
class HistogramInspection : public Inspection {
public:
	explicit HistogramInspection(std::string column) : column_(std::move(column)) {
	}

	std::string name() const override {
		return "histogram";
	}
	Annotation annotate_source(const Relation &source, std::size_t row) override;
	Annotation propagate(OpKind op, std::span<const Annotation *const> sources) override;
	Annotation summarize(OpKind op, std::span<const Annotation *const> rows) override;
	void observe(const Observation &observation) override;
	nlohmann::json result() const override;

	const std::string &column() const {
		return column_;
	}
	//! Recorded histograms in observation order.
	const std::vector<NodeHistograms> &histograms() const {
		return histograms_;
	}

private:
	std::string column_;
	std::vector<NodeHistograms> histograms_;
};

//! One finding per (relational node, group seen on either side); flagged iff
//! ratio < tau or ratio > 1 / tau. Nodes with an empty input and groups absent
//! on both sides produce no finding. Sorted by node id, then group.
std::vector<DistributionFinding> check_distributions(const std::vector<NodeHistograms> &histograms,
                                                     double tau = kDefaultTau);

nlohmann::json to_json(const DistributionFinding &finding);
nlohmann::json to_json(const std::vector<DistributionFinding> &findings);

//! Relational operators whose histograms are screened for distortions.
bool is_relational(OpKind kind);

} // namespace pipelens
