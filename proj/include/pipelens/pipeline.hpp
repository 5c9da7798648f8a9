#pragma once

#include "pipelens/models.hpp"
#include "pipelens/plan.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pipelens {

inline constexpr int kPipelineVersion = 1;

struct DatasetDecl {
	std::string path;
	std::string format = "csv";
	bool operator==(const DatasetDecl &) const = default;
};

//! One relational step. `op` is Selection, Projection, ExtendedProjection,
//! Join or Concat; `params` holds the matching parameter record (monostate for
//! Concat).
struct StepDecl {
	OpKind op = OpKind::Selection;
	std::string id;
	std::vector<std::string> inputs;
	NodeParams params;
	bool operator==(const StepDecl &) const = default;
};

struct FeatureDecl {
	std::string column;
	Encoder encoder = Encoder::OneHot;
	bool operator==(const FeatureDecl &) const = default;
};

struct LabelDecl {
	std::string column;
	std::string positive;
	bool operator==(const LabelDecl &) const = default;
};

struct SensitiveDecl {
	std::string column;
	std::string privileged;
	bool operator==(const SensitiveDecl &) const = default;
};

struct PipelineDoc {
	int version = kPipelineVersion;
	std::map<std::string, DatasetDecl> datasets;
	std::vector<StepDecl> steps;
	std::vector<FeatureDecl> featurize;
	LabelDecl label;
	//! Exactly one of split / test_dataset is set.
	std::optional<SplitParams> split;
	std::optional<std::string> test_dataset;
	ModelConfig model;
	std::vector<std::string> metrics {"accuracy"};
	std::optional<SensitiveDecl> sensitive;

	bool operator==(const PipelineDoc &) const = default;
};

//! Strict JSON reader: unknown keys, wrong types and dangling references are
//! rejected. Throws SyntaxError or SemanticError.
PipelineDoc parse_pipeline(std::string_view text);

//! Inverse of parse_pipeline: parse_pipeline(serialize_pipeline(d)) == d.
std::string serialize_pipeline(const PipelineDoc &doc);
nlohmann::json to_json(const PipelineDoc &doc);

//! Id of the relation feeding featurization, before any split.
std::string final_relation(const PipelineDoc &doc);

//! Key of each featurize entry: the column, or `<column>#<k>` (k = 2, 3, ...)
//! when a column is encoded more than once.
std::vector<std::string> feature_keys(const PipelineDoc &doc);

//! Dataset schemas read from the CSV headers and cells under `data_root`.
//! Datasets whose file cannot be read are left out when `skip_missing`.
std::map<std::string, Schema> load_schemas(const PipelineDoc &doc, const std::filesystem::path &data_root,
                                           bool skip_missing = false);

//! Lowers a document to a plan whose only sink is `__score`. Sources listed in
//! `schemas` are bound, which enables column checks. Throws SemanticError when
//! the result does not validate (e.g. a featurized column is missing).
Plan build_plan(const PipelineDoc &doc, const std::map<std::string, Schema> &schemas = {});

//! Rewrites the seed of every Split and TrainModel node.
Plan with_seed(const Plan &plan, std::uint64_t seed);

} // namespace pipelens
