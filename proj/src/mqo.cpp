#include "pipelens/mqo.hpp"

#include "pipelens/csv.hpp"
#include "pipelens/errors.hpp"
#include "pipelens/pipeline.hpp"

#include <algorithm>
#include <set>

namespace pipelens {

const Sha256Digest &SourceDigests::digest(const std::string &path) {
	auto full = (root_ / path).string();
	auto it = cache_.find(full);
	if (it == cache_.end()) {
		it = cache_.emplace(full, sha256(read_file(full))).first;
	}
	return it->second;
}

std::map<std::string, Fingerprint> fingerprint_all(const Plan &plan, SourceDigests &digests) {
	std::map<std::string, Fingerprint> fps;
	for (const auto &id : topological_order(plan)) {
		const auto &node = plan.node(id);
		nlohmann::json params;
		if (node.kind == OpKind::DataSource) {
			const auto &p = node.get<DataSourceParams>();
			params = {{"dataset", p.dataset}, {"content_sha256", to_hex(digests.digest(p.path))}};
		} else {
			params = params_to_json(node);
		}
		nlohmann::json inputs = nlohmann::json::array();
		for (const auto &e : node.inputs) {
			inputs.push_back({to_hex(fps.at(e.node)), std::string(to_string(e.port))});
		}
		nlohmann::json canonical = {{"op", std::string(to_string(node.kind))}, {"params", params}, {"inputs", inputs}};
		fps[id] = sha256(canonical.dump());
	}
	return fps;
}

Fingerprint fingerprint(const Plan &plan, const std::string &node_id, const std::filesystem::path &data_root) {
	SourceDigests digests(data_root);
	if (!plan.contains(node_id)) {
		throw UnknownTarget(node_id);
	}
	return fingerprint_all(plan, digests).at(node_id);
}

Plan canonicalize(const Plan &plan) {
	Plan out = plan;
	const auto &sinks = plan.declared_sinks();
	for (const auto &[id, node] : plan.nodes()) {
		if (node.kind != OpKind::Corruption || node.get<CorruptionParams>().fraction != 0.0 ||
		    node.inputs.size() != 1 || std::find(sinks.begin(), sinks.end(), id) != sinks.end()) {
			continue;
		}
		out.replace_edges({id, Port::Out}, out.node(id).inputs[0]);
		out.remove_node(id);
	}
	return out;
}

MergedPlan merge(const std::vector<std::pair<std::string, Plan>> &variants, const std::filesystem::path &data_root) {
	MergedPlan merged;
	SourceDigests digests(data_root);
	std::map<Fingerprint, std::string> by_fp;
	std::vector<std::string> sink_set;

	for (std::size_t k = 0; k < variants.size(); k++) {
		const auto &[label, original] = variants[k];
		auto diags = validate(original);
		if (!diags.empty()) {
			throw InvalidPlan(std::move(diags));
		}
		merged.naive_operator_count += original.size();
		Plan plan = canonicalize(original);
		auto sinks = plan.sinks();
		if (sinks.size() != 1) {
			throw Error("variant '" + label + "' must have exactly one sink");
		}
		auto fps = fingerprint_all(plan, digests);
		std::map<std::string, std::string> local;
		std::set<std::string> used;
		for (const auto &id : topological_order(plan)) {
			const auto &fp = fps.at(id);
			std::string mid;
			if (auto it = by_fp.find(fp); it != by_fp.end()) {
				mid = it->second;
			} else {
				mid = id;
				for (int n = 0; merged.plan.contains(mid); n++) {
					mid = id + "@v" + std::to_string(k) + (n == 0 ? "" : "." + std::to_string(n));
				}
				PlanNode node = plan.node(id);
				node.id = mid;
				for (auto &e : node.inputs) {
					e.node = local.at(e.node);
				}
				merged.plan.add_node(std::move(node));
				merged.fingerprints[mid] = fp;
				by_fp.emplace(fp, mid);
			}
			local[id] = mid;
			if (used.insert(mid).second) {
				merged.hits[mid]++;
			}
		}
		merged.labels.push_back(label);
		merged.sinks.push_back(local.at(sinks[0]));
		if (std::find(sink_set.begin(), sink_set.end(), merged.sinks.back()) == sink_set.end()) {
			sink_set.push_back(merged.sinks.back());
		}
	}
	merged.plan.set_sinks(sink_set);

	// Kahn's algorithm, ready nodes ordered by fingerprint bytes
	std::map<std::string, std::size_t> pending;
	std::map<std::string, std::vector<std::string>> consumers;
	for (const auto &[id, node] : merged.plan.nodes()) {
		std::set<std::string> distinct;
		for (const auto &e : node.inputs) {
			distinct.insert(e.node);
		}
		pending[id] = distinct.size();
		for (const auto &d : distinct) {
			consumers[d].push_back(id);
		}
	}
	std::set<std::pair<Fingerprint, std::string>> ready;
	for (const auto &[id, count] : pending) {
		if (count == 0) {
			ready.emplace(merged.fingerprints.at(id), id);
		}
	}
	while (!ready.empty()) {
		auto id = ready.begin()->second;
		ready.erase(ready.begin());
		merged.schedule.push_back(id);
		for (const auto &c : consumers[id]) {
			if (--pending[c] == 0) {
				ready.emplace(merged.fingerprints.at(c), c);
			}
		}
	}
	return merged;
}

nlohmann::json to_json(const ReuseStats &stats) {
	return {{"naive_operator_count", stats.naive_operator_count},
	        {"merged_operator_count", stats.merged_operator_count},
	        {"shared_node_count", stats.shared_node_count}};
}

namespace {

std::string error_message(const std::exception_ptr &e) {
	try {
		std::rethrow_exception(e);
	} catch (const std::exception &ex) {
		return ex.what();
	} catch (...) {
		return "unknown error";
	}
}

} // namespace

MergedResult execute_merged(const MergedPlan &merged, const ExecuteOptions &options) {
	std::vector<Edge> keep;
	for (const auto &s : merged.sinks) {
		keep.push_back({s, Port::Out});
	}
	const Plan &plan = merged.plan;
	auto run = options.seed_override ? run_schedule(with_seed(plan, *options.seed_override), merged.schedule, keep, options)
	                                 : run_schedule(plan, merged.schedule, keep, options);

	// failures are tagged with every variant they reach
	std::vector<std::pair<std::exception_ptr, std::vector<std::string>>> affected;
	auto tags_of = [&](const std::exception_ptr &e) -> std::vector<std::string> & {
		for (auto &[ptr, labels] : affected) {
			if (ptr == e) {
				return labels;
			}
		}
		return affected.emplace_back(e, std::vector<std::string> {}).second;
	};
	for (std::size_t i = 0; i < merged.labels.size(); i++) {
		if (auto f = run.failures.find(merged.sinks[i]); f != run.failures.end()) {
			tags_of(f->second).push_back(merged.labels[i]);
		}
	}

	MergedResult result;
	for (std::size_t i = 0; i < merged.labels.size(); i++) {
		VariantOutcome o;
		o.label = merged.labels[i];
		if (auto f = run.failures.find(merged.sinks[i]); f != run.failures.end()) {
			std::string tags;
			for (const auto &l : tags_of(f->second)) {
				tags += (tags.empty() ? "" : ", ") + l;
			}
			o.error = error_message(f->second) + " [variants: " + tags + "]";
		} else {
			o.score = std::get<ScoreReport>(run.values.at(merged.sinks[i]));
		}
		result.outcomes.push_back(std::move(o));
	}
	result.stats.naive_operator_count = merged.naive_operator_count;
	result.stats.merged_operator_count = merged.plan.size();
	for (const auto &[id, h] : merged.hits) {
		if (h >= 2) {
			result.stats.shared_node_count++;
		}
	}
	result.stats.hits = merged.hits;
	result.stats.peak_live = run.trace.peak_live;
	result.trace = std::move(run.trace);
	return result;
}

MergedResult execute_naive(const std::vector<std::pair<std::string, Plan>> &variants, const ExecuteOptions &options) {
	MergedResult result;
	for (const auto &[label, plan] : variants) {
		VariantOutcome o;
		o.label = label;
		result.stats.naive_operator_count += plan.size();
		try {
			auto r = execute(plan, options);
			o.score = r.score;
			result.trace.operator_count += r.trace.operator_count;
			result.stats.peak_live = std::max(result.stats.peak_live, r.trace.peak_live);
		} catch (const Error &e) {
			o.error = std::string(e.what()) + " [variants: " + label + "]";
		}
		result.outcomes.push_back(std::move(o));
	}
	result.stats.merged_operator_count = result.stats.naive_operator_count;
	return result;
}

} // namespace pipelens
