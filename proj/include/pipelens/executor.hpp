#pragma once

#include "pipelens/datum.hpp"
#include "pipelens/inspection.hpp"
#include "pipelens/plan.hpp"

#include <nlohmann/json.hpp>

#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pipelens {

struct ExecuteOptions {
	std::filesystem::path data_root;
	//! Not owned; each gets one annotation slot per row, in this order.
	std::vector<Inspection *> inspections;
	//! When set, sources keep only the rows it accepts (row ids unchanged).
	std::function<bool(const RowId &)> source_filter;
	//! Replaces the seed of every Split and TrainModel node.
	std::optional<std::uint64_t> seed_override;
	//! Extra edges whose values are returned alongside the score.
	std::vector<Edge> retain;
};

struct NodeTrace {
	std::string node;
	OpKind kind = OpKind::DataSource;
	std::size_t rows = 0;
	//! Rows on the test side of a Split.
	std::optional<std::size_t> test_rows;
	double wall_ms = 0.0;
	std::vector<std::string> warnings;
};

struct ExecutionTrace {
	//! In evaluation order.
	std::vector<NodeTrace> nodes;
	//! Number of node evaluations actually performed.
	std::size_t operator_count = 0;
	//! Most intermediates held at once under last-consumer release.
	std::size_t peak_live = 0;
};

//! Trace without wall times, so equal runs serialize identically.
nlohmann::json to_json(const ExecutionTrace &trace);

struct ExecutionResult {
	ScoreReport score;
	ExecutionTrace trace;
	//! Keyed by Edge::to_string().
	std::map<std::string, Datum> retained;
};

//! Runs a plan with a single Score sink. Throws InvalidPlan when the plan does
//! not validate, Error for other sink shapes, and any operator error as is.
ExecutionResult execute(const Plan &plan, const ExecuteOptions &options);

//! Evaluates only the ancestors of `target` and returns its value.
Datum execute_to(const Plan &plan, const Edge &target, const ExecuteOptions &options);

//! Outputs of one operator evaluation: one entry, or (Train, Test) for a Split.
using NodeOutputs = std::vector<std::pair<Port, Datum>>;

//! Evaluates one operator over already computed inputs, propagating the
//! annotation slots of `inspections`. Transform warnings are appended to
//! `warnings` when given.
NodeOutputs eval_operator(const PlanNode &node, const std::vector<const Datum *> &inputs,
                          const ExecuteOptions &options, std::vector<std::string> *warnings = nullptr);

//! Result of running a schedule: the values (or failures) of the kept edges.
struct ScheduleResult {
	std::map<std::string, Datum> values;
	std::map<std::string, std::exception_ptr> failures;
	ExecutionTrace trace;
};

//! Evaluates nodes in `order`, each exactly once, releasing every
//! intermediate after its last consumer. A failing node poisons its
//! dependents, which are skipped; the failure is reported for every kept
//! edge downstream of it. Inspections observe each evaluated node once.
ScheduleResult run_schedule(const Plan &plan, const std::vector<std::string> &order, const std::vector<Edge> &keep,
                            const ExecuteOptions &options);

} // namespace pipelens
