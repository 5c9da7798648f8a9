#pragma once

#include "pipelens/executor.hpp"
#include "pipelens/hash.hpp"
#include "pipelens/plan.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pipelens {

using Fingerprint = Sha256Digest;

//! Content digests of source files, keyed by resolved path.
class SourceDigests {
public:
	explicit SourceDigests(std::filesystem::path data_root) : root_(std::move(data_root)) {
	}
	//! SHA-256 of the file bytes. Throws IoError.
	const Sha256Digest &digest(const std::string &path);

private:
	std::filesystem::path root_;
	std::map<std::string, Sha256Digest> cache_;
};

//! Fingerprints of every node: SHA-256 over the op kind, canonical parameters
//! (sorted keys, shortest round-trip floats) and the ordered input
//! fingerprints with their ports. Sources hash their dataset name and file
//! content instead of the path. Throws IoError on an unreadable source.
std::map<std::string, Fingerprint> fingerprint_all(const Plan &plan, SourceDigests &digests);
Fingerprint fingerprint(const Plan &plan, const std::string &node_id, const std::filesystem::path &data_root);

//! Splices out Corruption nodes that cannot change any row (fraction 0).
Plan canonicalize(const Plan &plan);

struct MergedPlan {
	//! Union DAG; every fingerprint occurs once.
	Plan plan;
	std::vector<std::string> labels;
	//! Merged id of each variant's sink, aligned with `labels`.
	std::vector<std::string> sinks;
	//! Topological order, ties broken by fingerprint bytes.
	std::vector<std::string> schedule;
	std::map<std::string, Fingerprint> fingerprints;
	//! Number of variants whose plan contains each merged node.
	std::map<std::string, std::size_t> hits;
	//! Sum of the variant plan sizes as given (before canonicalization).
	std::size_t naive_operator_count = 0;
};

//! Unifies nodes with equal fingerprints across the given plans. A merged node
//! keeps the id it has in the first plan containing it, suffixed with
//! `@v<k>` if that id is already taken. Throws InvalidPlan when a plan does
//! not validate.
MergedPlan merge(const std::vector<std::pair<std::string, Plan>> &variants, const std::filesystem::path &data_root);

struct ReuseStats {
	std::size_t naive_operator_count = 0;
	std::size_t merged_operator_count = 0;
	//! Merged nodes used by two or more variants.
	std::size_t shared_node_count = 0;
	std::map<std::string, std::size_t> hits;
	std::size_t peak_live = 0;
};

//! Only the three counts, as reports carry them.
nlohmann::json to_json(const ReuseStats &stats);

struct VariantOutcome {
	std::string label;
	std::optional<ScoreReport> score;
	//! Set when the variant failed.
	std::string error;
};

struct MergedResult {
	std::vector<VariantOutcome> outcomes;
	ReuseStats stats;
	ExecutionTrace trace;
};

//! Evaluates every merged node once in schedule order. A failure only affects
//! the variants downstream of it.
MergedResult execute_merged(const MergedPlan &merged, const ExecuteOptions &options);

//! Executes each plan on its own; the reference semantics for execute_merged.
MergedResult execute_naive(const std::vector<std::pair<std::string, Plan>> &variants, const ExecuteOptions &options);

} // namespace pipelens
