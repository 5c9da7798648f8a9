#include "pipelens/whatif.hpp"

#include "pipelens/errors.hpp"
#include "pipelens/metrics.hpp"

#include "json_util.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace pipelens {

std::string describe(const Patch &patch) {
	return std::visit(
	    [](const auto &p) -> std::string {
		    using T = std::decay_t<decltype(p)>;
		    if constexpr (std::is_same_v<T, DataCorruption>) {
			    std::string s = "corrupt(" + p.dataset + "." + p.column + ", " + std::string(to_string(p.kind)) +
			                    ", fraction=" + format_double(p.fraction);
			    if (p.kind == CorruptionKind::Outliers) {
				    s += ", factor=" + format_double(p.factor);
			    }
			    return s + ", seed=" + std::to_string(p.seed) + ", branch=" + std::string(to_string(p.branch)) + ")";
		    } else if constexpr (std::is_same_v<T, OperatorPatch>) {
			    switch (p.action) {
			    case OperatorPatch::Action::Remove:
				    return "remove(" + p.target + ")";
			    case OperatorPatch::Action::ReplacePredicate:
				    return "replace_predicate(" + p.target + ", " + (p.predicate ? p.predicate->to_string() : "") + ")";
			    case OperatorPatch::Action::ReplaceEncoder:
				    return "replace_encoder(" + p.target + ", " +
				           (p.encoder ? std::string(to_string(*p.encoder)) : std::string()) + ")";
			    }
			    return "?";
		    } else if constexpr (std::is_same_v<T, FeatureDrop>) {
			    return "drop_feature(" + p.feature + ")";
		    } else {
			    return "model(" + to_json(p.config).dump() + ")";
		    }
	    },
	    patch);
}

namespace {

std::vector<std::string> nodes_of_kind(const Plan &plan, OpKind kind) {
	std::vector<std::string> out;
	for (const auto &[id, n] : plan.nodes()) {
		if (n.kind == kind) {
			out.push_back(id);
		}
	}
	return out;
}

std::set<std::string> ancestors(const Plan &plan, const std::string &id) {
	std::set<std::string> seen;
	std::vector<std::string> work {id};
	while (!work.empty()) {
		auto cur = work.back();
		work.pop_back();
		if (!plan.contains(cur) || !seen.insert(cur).second) {
			continue;
		}
		for (const auto &e : plan.node(cur).inputs) {
			work.push_back(e.node);
		}
	}
	return seen;
}

std::string fresh_id(const Plan &plan, const std::string &base) {
	std::string id = base;
	for (int n = 2; plan.contains(id); n++) {
		id = base + "_" + std::to_string(n);
	}
	return id;
}

Plan checked(Plan plan, const std::string &what) {
	auto diags = validate(plan);
	if (!diags.empty()) {
		throw InvalidAfterPatch(what + " leaves an invalid plan", std::move(diags));
	}
	return plan;
}

std::string find_source(const Plan &plan, const std::string &dataset) {
	for (const auto &id : nodes_of_kind(plan, OpKind::DataSource)) {
		if (plan.node(id).get<DataSourceParams>().dataset == dataset) {
			return id;
		}
	}
	throw UnknownTarget(dataset);
}

//! Ancestors of the label extraction feeding a TrainModel (train side) or a
//! Score (test side).
std::set<std::string> branch_ancestors(const Plan &plan, Branch branch) {
	auto kind = branch == Branch::Train ? OpKind::TrainModel : OpKind::Score;
	std::set<std::string> out;
	for (const auto &id : nodes_of_kind(plan, kind)) {
		const auto &n = plan.node(id);
		if (n.inputs.size() == 2) {
			auto a = ancestors(plan, n.inputs[1].node);
			out.insert(a.begin(), a.end());
		}
	}
	return out;
}

Plan apply_corruption(const Plan &plan, const DataCorruption &c) {
	std::string source = find_source(plan, c.dataset);
	if (!(c.fraction >= 0.0 && c.fraction <= 1.0)) {
		throw InvalidAfterPatch("corruption fraction must lie in [0, 1]", {});
	}
	if (!std::isfinite(c.factor)) {
		throw InvalidAfterPatch("corruption factor must be finite", {});
	}
	Plan out = plan;
	std::string id = fresh_id(plan, "__corrupt_" + c.dataset + "_" + c.column + "_" + std::string(to_string(c.branch)));
	CorruptionParams params {c.dataset, c.column, c.kind, c.fraction, c.factor, c.seed, c.branch};
	Edge above {source, Port::Out};

	auto splits = nodes_of_kind(plan, OpKind::Split);
	if (c.branch != Branch::Both && !splits.empty()) {
		if (splits.size() != 1) {
			throw InvalidAfterPatch("plan has more than one split; the corrupted branch is ambiguous", {});
		}
		if (!ancestors(plan, splits[0]).count(source)) {
			throw InvalidAfterPatch("dataset '" + c.dataset + "' does not feed the split", {});
		}
		above = {splits[0], c.branch == Branch::Train ? Port::Train : Port::Test};
	} else if (c.branch != Branch::Both && !branch_ancestors(plan, c.branch).count(source)) {
		throw InvalidAfterPatch("dataset '" + c.dataset + "' does not feed the " + std::string(to_string(c.branch)) +
		                            " branch",
		                        {});
	}
	out.replace_edges(above, {id, Port::Out});
	out.add_node({id, OpKind::Corruption, params, {above}});
	return checked(std::move(out), describe(c));
}

Plan apply_operator_patch(const Plan &plan, const OperatorPatch &p) {
	if (!plan.contains(p.target)) {
		throw UnknownTarget(p.target);
	}
	Plan out = plan;
	auto &node = out.node(p.target);
	switch (p.action) {
	case OperatorPatch::Action::Remove: {
		const auto &sinks = plan.sinks();
		if (node.inputs.size() != 1 || node.kind == OpKind::Split ||
		    std::find(sinks.begin(), sinks.end(), p.target) != sinks.end()) {
			throw InvalidAfterPatch("cannot splice out '" + p.target + "' (" + std::string(to_string(node.kind)) + ")",
			                        {});
		}
		Edge input = node.inputs[0];
		out.replace_edges({p.target, Port::Out}, input);
		out.remove_node(p.target);
		break;
	}
	case OperatorPatch::Action::ReplacePredicate:
		if (!p.predicate) {
			throw InvalidAfterPatch("replace_predicate needs a predicate", {});
		}
		if (node.kind == OpKind::Selection) {
			node.get<SelectionParams>().predicate = *p.predicate;
		} else if (node.kind == OpKind::ExtendedProjection) {
			node.get<ExtendedProjectionParams>().expr = *p.predicate;
		} else {
			throw InvalidAfterPatch("'" + p.target + "' has no predicate", {});
		}
		break;
	case OperatorPatch::Action::ReplaceEncoder: {
		if (!p.encoder) {
			throw InvalidAfterPatch("replace_encoder needs an encoder", {});
		}
		std::string fit = p.target;
		if (node.kind == OpKind::Transform) {
			fit = node.inputs.at(0).node;
		} else if (node.kind != OpKind::EstimatorFit) {
			throw InvalidAfterPatch("'" + p.target + "' is not an encoder", {});
		}
		out.node(fit).get<EncoderParams>().encoder = *p.encoder;
		for (const auto &c : out.consumers(fit)) {
			if (out.node(c).kind == OpKind::Transform) {
				out.node(c).get<EncoderParams>().encoder = *p.encoder;
			}
		}
		break;
	}
	}
	return checked(std::move(out), describe(p));
}

std::vector<std::string> fits_for(const Plan &plan, const std::string &feature) {
	std::vector<std::string> out;
	for (const auto &id : nodes_of_kind(plan, OpKind::EstimatorFit)) {
		if (plan.node(id).get<EncoderParams>().feature == feature) {
			out.push_back(id);
		}
	}
	return out;
}

Plan apply_feature_drop(const Plan &plan, const FeatureDrop &d) {
	auto fits = fits_for(plan, d.feature);
	if (fits.empty()) {
		throw UnknownTarget(d.feature);
	}
	Plan out = plan;
	for (const auto &fit : fits) {
		for (const auto &t : plan.consumers(fit)) {
			for (const auto &c : plan.consumers(t)) {
				auto &consumer = out.node(c);
				if (consumer.kind == OpKind::Concat) {
					std::erase_if(consumer.inputs, [&](const Edge &e) { return e.node == t; });
				}
			}
			out.remove_node(t);
		}
		out.remove_node(fit);
	}
	return checked(std::move(out), describe(d));
}

Plan apply_model_patch(const Plan &plan, const ModelPatch &m) {
	auto trains = nodes_of_kind(plan, OpKind::TrainModel);
	if (trains.empty()) {
		throw UnknownTarget("TrainModel");
	}
	Plan out = plan;
	for (const auto &id : trains) {
		out.node(id).get<ModelConfig>() = m.config;
	}
	return checked(std::move(out), describe(m));
}

//! What a patch acts on, for conflict detection.
std::vector<std::string> patch_keys(const Plan &plan, const Patch &patch) {
	return std::visit(
	    [&](const auto &p) -> std::vector<std::string> {
		    using T = std::decay_t<decltype(p)>;
		    if constexpr (std::is_same_v<T, DataCorruption>) {
			    return {"data:" + p.dataset + "." + p.column + "@" + std::string(to_string(p.branch))};
		    } else if constexpr (std::is_same_v<T, OperatorPatch>) {
			    if (p.action == OperatorPatch::Action::ReplaceEncoder && plan.contains(p.target) &&
			        plan.node(p.target).kind == OpKind::Transform) {
				    return {"node:" + plan.node(p.target).inputs.at(0).node};
			    }
			    return {"node:" + p.target};
		    } else if constexpr (std::is_same_v<T, FeatureDrop>) {
			    auto fits = fits_for(plan, p.feature);
			    if (fits.empty()) {
				    return {"feature:" + p.feature};
			    }
			    std::vector<std::string> keys;
			    for (const auto &f : fits) {
				    keys.push_back("node:" + f);
			    }
			    return keys;
		    } else {
			    std::vector<std::string> keys;
			    for (const auto &id : nodes_of_kind(plan, OpKind::TrainModel)) {
				    keys.push_back("node:" + id);
			    }
			    return keys.empty() ? std::vector<std::string> {"model"} : keys;
		    }
	    },
	    patch);
}

} // namespace

Plan apply_patch(const Plan &plan, const Patch &patch) {
	return std::visit(
	    [&](const auto &p) -> Plan {
		    using T = std::decay_t<decltype(p)>;
		    if constexpr (std::is_same_v<T, DataCorruption>) {
			    return apply_corruption(plan, p);
		    } else if constexpr (std::is_same_v<T, OperatorPatch>) {
			    return apply_operator_patch(plan, p);
		    } else if constexpr (std::is_same_v<T, FeatureDrop>) {
			    return apply_feature_drop(plan, p);
		    } else {
			    return apply_model_patch(plan, p);
		    }
	    },
	    patch);
}

Plan apply_patches(const Plan &plan, const std::vector<Patch> &patches) {
	std::set<std::string> touched;
	for (const auto &p : patches) {
		for (const auto &key : patch_keys(plan, p)) {
			if (!touched.insert(key).second) {
				throw ConflictingPatches("patch " + describe(p) + " conflicts with an earlier patch on " + key);
			}
		}
	}
	Plan out = plan;
	for (const auto &p : patches) {
		out = apply_patch(out, p);
	}
	return out;
}

bool AnalysisReport::failed() const {
	return std::any_of(variants.begin(), variants.end(), [](const auto &v) { return !v.error.empty(); });
}

nlohmann::json to_json(const AnalysisReport &report) {
	nlohmann::json variants = nlohmann::json::array();
	for (const auto &v : report.variants) {
		nlohmann::json j = {{"label", v.label}, {"patches", v.patches}};
		j["score"] = v.score ? to_json(*v.score) : nlohmann::json(nullptr);
		j["delta"] = v.delta;
		if (v.importance) {
			j["importance"] = *v.importance;
		}
		if (!v.error.empty()) {
			j["error"] = v.error;
		}
		variants.push_back(std::move(j));
	}
	return {{"analysis", report.analysis},
	        {"baseline", to_json(report.baseline)},
	        {"variants", variants},
	        {"reuse_stats", to_json(report.reuse)},
	        {"warnings", report.warnings}};
}

AnalysisReport run_variants(const std::string &analysis, const Plan &base, const std::vector<Variant> &variants,
                            const AnalysisOptions &options) {
	std::vector<std::pair<std::string, Plan>> plans;
	plans.emplace_back("baseline", base);
	for (const auto &v : variants) {
		plans.emplace_back(v.label, apply_patches(base, v.patches));
	}
	ExecuteOptions exec;
	exec.data_root = options.data_root;
	MergedResult result = options.use_mqo ? execute_merged(merge(plans, options.data_root), exec)
	                                      : execute_naive(plans, exec);

	const auto &baseline = result.outcomes.front();
	if (!baseline.score) {
		throw ExecutionError("baseline failed: " + baseline.error, {"baseline"});
	}
	AnalysisReport report;
	report.analysis = analysis;
	report.baseline = *baseline.score;
	report.reuse = result.stats;
	for (std::size_t i = 0; i < variants.size(); i++) {
		const auto &o = result.outcomes[i + 1];
		VariantReport row;
		row.label = variants[i].label;
		for (const auto &p : variants[i].patches) {
			row.patches.push_back(describe(p));
		}
		row.score = o.score;
		row.error = o.error;
		if (o.score) {
			for (const auto &[name, v] : o.score->metrics) {
				row.delta[name] = v - report.baseline.at(name);
			}
		}
		report.variants.push_back(std::move(row));
	}
	return report;
}

AnalysisReport analyze_robustness(const Plan &plan, const RobustnessGrid &grid, const AnalysisOptions &options) {
	if (grid.kinds.empty() || grid.fractions.empty()) {
		throw Error("robustness grid needs at least one kind and one fraction");
	}
	std::vector<std::pair<std::string, double>> cells;
	for (auto k : grid.kinds) {
		for (double f : grid.fractions) {
			cells.emplace_back(std::string(to_string(k)), f);
		}
	}
	std::sort(cells.begin(), cells.end());
	cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
	std::vector<Variant> variants;
	for (const auto &[name, f] : cells) {
		DataCorruption c {grid.dataset, grid.column, *corruption_kind_from_string(name), f, grid.factor, grid.seed,
		                  grid.branch};
		variants.push_back({name + "@" + format_double(f), {c}});
	}
	return run_variants("robustness", plan, variants, options);
}

std::vector<std::string> plan_features(const Plan &plan) {
	std::vector<std::string> out;
	for (const auto &id : nodes_of_kind(plan, OpKind::EstimatorFit)) {
		out.push_back(plan.node(id).get<EncoderParams>().feature);
	}
	std::sort(out.begin(), out.end());
	out.erase(std::unique(out.begin(), out.end()), out.end());
	return out;
}

namespace {

const PlanNode &score_node(const Plan &plan) {
	auto scores = nodes_of_kind(plan, OpKind::Score);
	if (scores.size() != 1) {
		throw Error("analysis needs a plan with exactly one Score node");
	}
	return plan.node(scores[0]);
}

} // namespace

AnalysisReport analyze_feature_importance(const Plan &plan, const AnalysisOptions &options,
                                          std::optional<std::string> metric) {
	const auto &metrics = score_node(plan).get<ScoreParams>().metrics;
	std::string m = metric ? *metric : metrics.front();
	if (std::find(metrics.begin(), metrics.end(), m) == metrics.end()) {
		throw Error("metric '" + m + "' is not computed by the plan");
	}
	std::vector<Variant> variants;
	std::vector<std::string> warnings;
	for (const auto &f : plan_features(plan)) {
		FeatureDrop drop {f};
		try {
			apply_patch(plan, drop);
		} catch (const InvalidAfterPatch &) {
			warnings.push_back("dropping feature '" + f + "' leaves an invalid plan; skipped");
			continue;
		}
		variants.push_back({"drop:" + f, {drop}});
	}
	auto report = run_variants("feature_importance", plan, variants, options);
	report.warnings = std::move(warnings);
	for (auto &row : report.variants) {
		if (row.score) {
			row.importance = report.baseline.at(m) - row.score->at(m);
		}
	}
	std::stable_sort(report.variants.begin(), report.variants.end(), [](const auto &a, const auto &b) {
		if (a.importance.has_value() != b.importance.has_value()) {
			return a.importance.has_value();
		}
		if (a.importance && *a.importance != *b.importance) {
			return *a.importance > *b.importance;
		}
		return a.label < b.label;
	});
	return report;
}

AnalysisReport analyze_operator_fairness(const Plan &plan, const std::vector<std::string> &operators,
                                         const AnalysisOptions &options) {
	for (const auto &op : operators) {
		if (!plan.contains(op)) {
			throw UnknownTarget(op);
		}
	}
	const auto &score = score_node(plan);
	if (!score.get<ScoreParams>().privileged) {
		throw Error("operator fairness needs a sensitive attribute with a privileged group");
	}
	Plan base = plan;
	base.node(score.id).get<ScoreParams>().metrics = {std::string(kAccuracy), std::string(kDemographicParity)};

	std::vector<std::string> ops = operators;
	std::sort(ops.begin(), ops.end());
	ops.erase(std::unique(ops.begin(), ops.end()), ops.end());
	std::vector<Variant> variants;
	for (const auto &op : ops) {
		variants.push_back({"remove:" + op, {OperatorPatch {op, OperatorPatch::Action::Remove, {}, {}}}});
	}
	return run_variants("operator_fairness", base, variants, options);
}

AnalysisReport run_analysis(const Plan &plan, const nlohmann::json &config, const AnalysisOptions &options) {
	using namespace detail;
	require_object(config, "");
	if (!config.contains("analysis")) {
		throw SemanticError("analysis", "missing required key");
	}
	auto analysis = get_string(config["analysis"], "analysis");
	if (analysis == "robustness") {
		check_keys(config, "", {"analysis", "dataset", "column", "kinds", "fractions", "seed", "branch", "factor"},
		           {"dataset", "column", "kinds", "fractions"});
		RobustnessGrid grid;
		grid.dataset = get_nonempty_string(config["dataset"], "dataset");
		grid.column = get_nonempty_string(config["column"], "column");
		auto kinds = get_string_list(config["kinds"], "kinds");
		for (std::size_t i = 0; i < kinds.size(); i++) {
			auto k = corruption_kind_from_string(kinds[i]);
			if (!k) {
				throw SemanticError(index_path("kinds", i), "unknown corruption kind '" + kinds[i] + "'");
			}
			grid.kinds.push_back(*k);
		}
		if (!config["fractions"].is_array()) {
			throw SemanticError("fractions", "expected an array");
		}
		for (std::size_t i = 0; i < config["fractions"].size(); i++) {
			double f = get_number(config["fractions"][i], index_path("fractions", i));
			if (!(f >= 0.0 && f <= 1.0)) {
				throw SemanticError(index_path("fractions", i), "must lie in [0, 1]");
			}
			grid.fractions.push_back(f);
		}
		if (grid.kinds.empty() || grid.fractions.empty()) {
			throw SemanticError("kinds", "the grid needs at least one kind and one fraction");
		}
		if (config.contains("seed")) {
			grid.seed = get_u64(config["seed"], "seed");
		}
		if (config.contains("branch")) {
			auto name = get_string(config["branch"], "branch");
			auto b = branch_from_string(name);
			if (!b) {
				throw SemanticError("branch", "unknown branch '" + name + "'");
			}
			grid.branch = *b;
		}
		if (config.contains("factor")) {
			grid.factor = get_number(config["factor"], "factor");
		}
		return analyze_robustness(plan, grid, options);
	}
	if (analysis == "feature_importance") {
		check_keys(config, "", {"analysis", "metric"}, {});
		std::optional<std::string> metric;
		if (config.contains("metric")) {
			metric = get_nonempty_string(config["metric"], "metric");
		}
		return analyze_feature_importance(plan, options, metric);
	}
	if (analysis == "operator_fairness") {
		check_keys(config, "", {"analysis", "operators"}, {"operators"});
		return analyze_operator_fairness(plan, get_string_list(config["operators"], "operators"), options);
	}
	throw SemanticError("analysis", "unknown analysis '" + analysis + "'");
}

} // namespace pipelens
