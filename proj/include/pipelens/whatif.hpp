#pragma once

#include "pipelens/mqo.hpp"
#include "pipelens/plan.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace pipelens {

struct DataCorruption {
	std::string dataset;
	std::string column;
	CorruptionKind kind = CorruptionKind::MissingValues;
	double fraction = 0.0;
	//! Multiplier for Outliers; ignored by the other kinds.
	double factor = 1.0;
	std::uint64_t seed = 0;
	Branch branch = Branch::Test;
};

struct OperatorPatch {
	enum class Action { Remove, ReplacePredicate, ReplaceEncoder };

	std::string target;
	Action action = Action::Remove;
	std::optional<Predicate> predicate {};
	std::optional<Encoder> encoder {};
};

//! Removes the featurize entry with this key (see feature_keys()).
struct FeatureDrop {
	std::string feature;
};

struct ModelPatch {
	ModelConfig config;
};

using Patch = std::variant<DataCorruption, OperatorPatch, FeatureDrop, ModelPatch>;

std::string describe(const Patch &patch);

//! Applies one patch to a copy of `plan`. Throws UnknownTarget when the patch
//! does not resolve, InvalidAfterPatch when the result does not validate.
Plan apply_patch(const Plan &plan, const Patch &patch);

//! Applies patches in order. Throws ConflictingPatches when two of them act
//! on the same node (or the same dataset column and branch).
Plan apply_patches(const Plan &plan, const std::vector<Patch> &patches);

struct Variant {
	std::string label;
	std::vector<Patch> patches;
};

struct VariantReport {
	std::string label;
	std::vector<std::string> patches;
	std::optional<ScoreReport> score;
	//! Variant minus baseline, per metric.
	std::map<std::string, double> delta;
	//! Baseline minus variant on the analyzed metric (feature importance).
	std::optional<double> importance;
	std::string error;
};

struct AnalysisReport {
	std::string analysis;
	ScoreReport baseline;
	std::vector<VariantReport> variants;
	ReuseStats reuse;
	std::vector<std::string> warnings;

	bool failed() const;
};

nlohmann::json to_json(const AnalysisReport &report);

struct AnalysisOptions {
	std::filesystem::path data_root;
	//! false runs every variant on its own (reference semantics).
	bool use_mqo = true;
};

//! Executes the baseline and the variants, jointly unless `use_mqo` is off.
//! Variant rows keep the given order. Throws ExecutionError when the baseline
//! fails.
AnalysisReport run_variants(const std::string &analysis, const Plan &base, const std::vector<Variant> &variants,
                            const AnalysisOptions &options);

struct RobustnessGrid {
	std::string dataset;
	std::string column;
	std::vector<CorruptionKind> kinds;
	std::vector<double> fractions;
	std::uint64_t seed = 0;
	Branch branch = Branch::Test;
	double factor = 10.0;
};

//! One corruption variant per (kind, fraction), rows sorted by kind name then
//! fraction.
AnalysisReport analyze_robustness(const Plan &plan, const RobustnessGrid &grid, const AnalysisOptions &options);

//! One FeatureDrop variant per feature; rows sorted by importance descending,
//! ties by feature. Drops that invalidate the plan are skipped with a warning.
AnalysisReport analyze_feature_importance(const Plan &plan, const AnalysisOptions &options,
                                          std::optional<std::string> metric = std::nullopt);

//! One Remove variant per listed operator, scored on accuracy and
//! demographic parity difference. Throws UnknownTarget.
AnalysisReport analyze_operator_fairness(const Plan &plan, const std::vector<std::string> &operators,
                                         const AnalysisOptions &options);

//! Feature keys of a plan's EstimatorFit nodes, sorted.
std::vector<std::string> plan_features(const Plan &plan);

//! Runs the analysis described by a config object:
//! {"analysis": "robustness" | "feature_importance" | "operator_fairness", ...}.
//! Throws SemanticError on a malformed config.
AnalysisReport run_analysis(const Plan &plan, const nlohmann::json &config, const AnalysisOptions &options);

} // namespace pipelens
