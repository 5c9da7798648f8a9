#include "pipelens/pipeline.hpp"

#include "pipelens/csv.hpp"
#include "pipelens/errors.hpp"
#include "pipelens/metrics.hpp"

#include "json_util.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace pipelens {

using nlohmann::json;
using namespace detail;

namespace {

Predicate get_predicate(const json &j, const std::string &path) {
	auto text = get_string(j, path);
	try {
		return parse_predicate(text);
	} catch (const SyntaxError &e) {
		throw SemanticError(path, e.what());
	}
}

bool reserved_id(const std::string &id) {
	return id.rfind("__", 0) == 0;
}

std::pair<std::size_t, std::size_t> line_and_column(std::string_view text, std::size_t offset) {
	std::size_t line = 1, col = 1;
	for (std::size_t i = 0; i < offset && i < text.size(); i++) {
		if (text[i] == '\n') {
			line++;
			col = 1;
		} else {
			col++;
		}
	}
	return {line, col};
}

StepDecl parse_step(const json &j, const std::string &path) {
	require_object(j, path);
	if (!j.contains("op")) {
		throw SemanticError(join_path(path, "op"), "missing required key");
	}
	auto op = get_string(j["op"], join_path(path, "op"));
	StepDecl step;
	std::size_t min_inputs = 1, max_inputs = 1;
	if (op == "selection") {
		check_keys(j, path, {"op", "id", "inputs", "predicate"}, {"id", "inputs", "predicate"});
		step.op = OpKind::Selection;
		step.params = SelectionParams {get_predicate(j["predicate"], join_path(path, "predicate"))};
	} else if (op == "projection") {
		check_keys(j, path, {"op", "id", "inputs", "columns"}, {"id", "inputs", "columns"});
		step.op = OpKind::Projection;
		auto cols = get_string_list(j["columns"], join_path(path, "columns"));
		if (cols.empty()) {
			throw SemanticError(join_path(path, "columns"), "must list at least one column");
		}
		step.params = ProjectionParams {std::move(cols)};
	} else if (op == "extended_projection") {
		check_keys(j, path, {"op", "id", "inputs", "as", "expr"}, {"id", "inputs", "as", "expr"});
		step.op = OpKind::ExtendedProjection;
		step.params = ExtendedProjectionParams {get_nonempty_string(j["as"], join_path(path, "as")),
		                                        get_predicate(j["expr"], join_path(path, "expr"))};
	} else if (op == "join") {
		check_keys(j, path, {"op", "id", "inputs", "on"}, {"id", "inputs", "on"});
		step.op = OpKind::Join;
		step.params = JoinParams {get_nonempty_string(j["on"], join_path(path, "on"))};
		min_inputs = max_inputs = 2;
	} else if (op == "concat") {
		check_keys(j, path, {"op", "id", "inputs"}, {"id", "inputs"});
		step.op = OpKind::Concat;
		max_inputs = SIZE_MAX;
	} else {
		throw SemanticError(join_path(path, "op"), "unknown step operator '" + op + "'");
	}
	step.id = get_nonempty_string(j["id"], join_path(path, "id"));
	step.inputs = get_string_list(j["inputs"], join_path(path, "inputs"));
	if (step.inputs.size() < min_inputs || step.inputs.size() > max_inputs) {
		throw SemanticError(join_path(path, "inputs"), op + " takes " +
		                                                   (min_inputs == max_inputs ? std::to_string(min_inputs)
		                                                                             : "at least " + std::to_string(min_inputs)) +
		                                                   " input(s), got " + std::to_string(step.inputs.size()));
	}
	return step;
}

ModelConfig parse_model(const json &j, const std::string &path) {
	require_object(j, path);
	if (!j.contains("kind")) {
		throw SemanticError(join_path(path, "kind"), "missing required key");
	}
	auto name = get_string(j["kind"], join_path(path, "kind"));
	auto kind = model_kind_from_string(name);
	if (!kind) {
		throw SemanticError(join_path(path, "kind"), "unknown model kind '" + name + "'");
	}
	ModelConfig cfg;
	cfg.kind = *kind;
	if (cfg.kind != ModelKind::LogisticRegression) {
		check_keys(j, path, {"kind"}, {});
		return cfg;
	}
	check_keys(j, path, {"kind", "lr", "epochs", "seed"}, {});
	if (j.contains("lr")) {
		cfg.lr = get_number(j["lr"], join_path(path, "lr"));
		if (!(cfg.lr > 0.0) || !std::isfinite(cfg.lr)) {
			throw SemanticError(join_path(path, "lr"), "must be a positive finite number");
		}
	}
	if (j.contains("epochs")) {
		cfg.epochs = get_u64(j["epochs"], join_path(path, "epochs"));
	}
	if (j.contains("seed")) {
		cfg.seed = get_u64(j["seed"], join_path(path, "seed"));
	}
	return cfg;
}

const char *step_op_name(OpKind op) {
	switch (op) {
	case OpKind::Selection:
		return "selection";
	case OpKind::Projection:
		return "projection";
	case OpKind::ExtendedProjection:
		return "extended_projection";
	case OpKind::Join:
		return "join";
	default:
		return "concat";
	}
}

} // namespace

PipelineDoc parse_pipeline(std::string_view text) {
	json root;
	try {
		root = json::parse(text);
	} catch (const json::parse_error &e) {
		std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
		auto [line, col] = line_and_column(text, offset);
		std::string msg = e.what();
		// drop nlohmann's "[json.exception.parse_error.101] parse error at line x, column y: " prefix
		if (auto p = msg.find(": "); p != std::string::npos) {
			msg = msg.substr(p + 2);
		}
		throw SyntaxError(line, col, msg);
	}

	check_keys(root, "",
	           {"version", "datasets", "steps", "featurize", "label", "split", "test_dataset", "model", "metrics",
	            "sensitive"},
	           {"version", "datasets", "featurize", "label", "model"});

	PipelineDoc doc;
	if (!root["version"].is_number_integer() || root["version"].get<std::int64_t>() != kPipelineVersion) {
		throw SemanticError("version", "unsupported pipeline version (expected 1)");
	}

	require_object(root["datasets"], "datasets");
	if (root["datasets"].empty()) {
		throw SemanticError("datasets", "at least one dataset is required");
	}
	for (const auto &[name, decl] : root["datasets"].items()) {
		std::string path = "datasets." + name;
		if (name.empty() || reserved_id(name)) {
			throw SemanticError(path, "invalid dataset name");
		}
		check_keys(decl, path, {"path", "format"}, {"path"});
		DatasetDecl d;
		d.path = get_nonempty_string(decl["path"], join_path(path, "path"));
		if (decl.contains("format")) {
			d.format = get_string(decl["format"], join_path(path, "format"));
			if (d.format != "csv") {
				throw SemanticError(join_path(path, "format"), "unsupported format '" + d.format + "'");
			}
		}
		doc.datasets.emplace(name, std::move(d));
	}

	if (root.contains("split") == root.contains("test_dataset")) {
		throw SemanticError("split", "exactly one of 'split' and 'test_dataset' is required");
	}
	if (root.contains("split")) {
		check_keys(root["split"], "split", {"test_fraction", "seed"}, {"test_fraction", "seed"});
		SplitParams s;
		s.test_fraction = get_number(root["split"]["test_fraction"], "split.test_fraction");
		if (!(s.test_fraction > 0.0 && s.test_fraction < 1.0)) {
			throw SemanticError("split.test_fraction", "must lie strictly between 0 and 1");
		}
		s.seed = get_u64(root["split"]["seed"], "split.seed");
		doc.split = s;
	} else {
		auto name = get_nonempty_string(root["test_dataset"], "test_dataset");
		if (!doc.datasets.count(name)) {
			throw SemanticError("test_dataset", "unknown dataset '" + name + "'");
		}
		doc.test_dataset = name;
	}

	// steps: ids unique, inputs name datasets or earlier steps
	std::set<std::string> known;
	for (const auto &[name, d] : doc.datasets) {
		known.insert(name);
	}
	std::set<std::string> consumed;
	if (root.contains("steps")) {
		if (!root["steps"].is_array()) {
			throw SemanticError("steps", "expected an array");
		}
		for (std::size_t i = 0; i < root["steps"].size(); i++) {
			std::string path = index_path("steps", i);
			auto step = parse_step(root["steps"][i], path);
			if (reserved_id(step.id)) {
				throw SemanticError(path + ".id", "ids starting with '__' are reserved");
			}
			if (doc.datasets.count(step.id)) {
				throw SemanticError(path + ".id", "step id '" + step.id + "' collides with a dataset name");
			}
			for (const auto &s : doc.steps) {
				if (s.id == step.id) {
					throw SemanticError(path + ".id", "duplicate step id '" + step.id + "'");
				}
			}
			for (std::size_t k = 0; k < step.inputs.size(); k++) {
				const auto &in = step.inputs[k];
				if (!known.count(in)) {
					throw SemanticError(index_path(path + ".inputs", k), "step '" + step.id + "' reads '" + in +
					                                                         "', which is neither a dataset nor an earlier step");
				}
				if (doc.test_dataset && in == *doc.test_dataset) {
					throw SemanticError(index_path(path + ".inputs", k),
					                    "step '" + step.id + "' reads the test dataset '" + in + "'");
				}
				consumed.insert(in);
			}
			known.insert(step.id);
			doc.steps.push_back(std::move(step));
		}
	}
	for (std::size_t i = 0; i + 1 < doc.steps.size(); i++) {
		if (!consumed.count(doc.steps[i].id)) {
			throw SemanticError(index_path("steps", i), "output of step '" + doc.steps[i].id + "' is never used");
		}
	}
	std::size_t source_count = 0;
	for (const auto &[name, d] : doc.datasets) {
		if (doc.test_dataset && name == *doc.test_dataset) {
			continue;
		}
		source_count++;
		if (!doc.steps.empty() && !consumed.count(name)) {
			throw SemanticError("datasets." + name, "dataset is never used");
		}
	}
	if (doc.steps.empty() && source_count != 1) {
		throw SemanticError("steps", "without steps exactly one training dataset is allowed, found " +
		                                 std::to_string(source_count));
	}

	if (!root["featurize"].is_array() || root["featurize"].empty()) {
		throw SemanticError("featurize", "expected a non-empty array");
	}
	for (std::size_t i = 0; i < root["featurize"].size(); i++) {
		std::string path = index_path("featurize", i);
		const auto &f = root["featurize"][i];
		check_keys(f, path, {"column", "encoder"}, {"column", "encoder"});
		FeatureDecl decl;
		decl.column = get_nonempty_string(f["column"], path + ".column");
		auto enc_name = get_string(f["encoder"], path + ".encoder");
		auto enc = encoder_from_string(enc_name);
		if (!enc) {
			throw SemanticError(path + ".encoder", "unknown encoder '" + enc_name + "'");
		}
		decl.encoder = *enc;
		doc.featurize.push_back(decl);
	}

	check_keys(root["label"], "label", {"column", "positive"}, {"column", "positive"});
	doc.label.column = get_nonempty_string(root["label"]["column"], "label.column");
	doc.label.positive = get_string(root["label"]["positive"], "label.positive");

	doc.model = parse_model(root["model"], "model");

	if (root.contains("sensitive")) {
		check_keys(root["sensitive"], "sensitive", {"column", "privileged"}, {"column", "privileged"});
		doc.sensitive = SensitiveDecl {get_nonempty_string(root["sensitive"]["column"], "sensitive.column"),
		                               get_string(root["sensitive"]["privileged"], "sensitive.privileged")};
	}

	if (root.contains("metrics")) {
		doc.metrics = get_string_list(root["metrics"], "metrics");
		if (doc.metrics.empty()) {
			throw SemanticError("metrics", "at least one metric is required");
		}
		std::set<std::string> seen;
		for (std::size_t i = 0; i < doc.metrics.size(); i++) {
			const auto &m = doc.metrics[i];
			if (!is_known_metric(m)) {
				throw SemanticError(index_path("metrics", i), "unknown metric '" + m + "'");
			}
			if (!seen.insert(m).second) {
				throw SemanticError(index_path("metrics", i), "duplicate metric '" + m + "'");
			}
			if (m == kDemographicParity && !doc.sensitive) {
				throw SemanticError(index_path("metrics", i), "demographic_parity_difference needs 'sensitive'");
			}
		}
	}
	return doc;
}

json to_json(const PipelineDoc &doc) {
	json j;
	j["version"] = doc.version;
	j["datasets"] = json::object();
	for (const auto &[name, d] : doc.datasets) {
		j["datasets"][name] = {{"path", d.path}, {"format", d.format}};
	}
	j["steps"] = json::array();
	for (const auto &s : doc.steps) {
		json step = {{"op", step_op_name(s.op)}, {"id", s.id}, {"inputs", s.inputs}};
		PlanNode tmp {s.id, s.op, s.params, {}};
		auto params = params_to_json(tmp);
		if (s.op == OpKind::ExtendedProjection) {
			step["as"] = params["output"];
			step["expr"] = params["expr"];
		} else {
			step.update(params);
		}
		j["steps"].push_back(std::move(step));
	}
	j["featurize"] = json::array();
	for (const auto &f : doc.featurize) {
		j["featurize"].push_back({{"column", f.column}, {"encoder", std::string(to_string(f.encoder))}});
	}
	j["label"] = {{"column", doc.label.column}, {"positive", doc.label.positive}};
	if (doc.split) {
		j["split"] = {{"test_fraction", doc.split->test_fraction}, {"seed", doc.split->seed}};
	}
	if (doc.test_dataset) {
		j["test_dataset"] = *doc.test_dataset;
	}
	j["model"] = to_json(doc.model);
	j["metrics"] = doc.metrics;
	if (doc.sensitive) {
		j["sensitive"] = {{"column", doc.sensitive->column}, {"privileged", doc.sensitive->privileged}};
	}
	return j;
}

std::string serialize_pipeline(const PipelineDoc &doc) {
	return to_json(doc).dump(2) + "\n";
}

std::string final_relation(const PipelineDoc &doc) {
	if (!doc.steps.empty()) {
		return doc.steps.back().id;
	}
	for (const auto &[name, d] : doc.datasets) {
		if (!doc.test_dataset || name != *doc.test_dataset) {
			return name;
		}
	}
	throw SemanticError("datasets", "no training dataset");
}

std::vector<std::string> feature_keys(const PipelineDoc &doc) {
	std::map<std::string, int> seen;
	std::vector<std::string> keys;
	for (const auto &f : doc.featurize) {
		int k = ++seen[f.column];
		keys.push_back(k == 1 ? f.column : f.column + "#" + std::to_string(k));
	}
	return keys;
}

std::map<std::string, Schema> load_schemas(const PipelineDoc &doc, const std::filesystem::path &data_root,
                                           bool skip_missing) {
	std::map<std::string, Schema> out;
	for (const auto &[name, d] : doc.datasets) {
		auto path = data_root / d.path;
		if (skip_missing && !std::filesystem::is_regular_file(path)) {
			continue;
		}
		out.emplace(name, read_csv(path, name).schema);
	}
	return out;
}

namespace {

//! Document location responsible for a diagnostic on a lowered node.
std::string doc_path_for(const PipelineDoc &doc, const std::vector<std::string> &keys, const std::string &node) {
	for (std::size_t i = 0; i < doc.steps.size(); i++) {
		if (doc.steps[i].id == node) {
			return index_path("steps", i);
		}
	}
	for (std::size_t i = 0; i < keys.size(); i++) {
		if (node == "__fit_" + keys[i] || node == "__tf_" + keys[i] + "_train" || node == "__tf_" + keys[i] + "_test") {
			return index_path("featurize", i) + ".column";
		}
	}
	if (node == "__label_train") {
		return "label.column";
	}
	if (node == "__label_test") {
		return doc.sensitive ? "sensitive.column" : "label.column";
	}
	if (doc.datasets.count(node)) {
		return "datasets." + node;
	}
	return node;
}

} // namespace

Plan build_plan(const PipelineDoc &doc, const std::map<std::string, Schema> &schemas) {
	Plan plan;
	for (const auto &[name, d] : doc.datasets) {
		DataSourceParams p {name, d.path, std::nullopt};
		if (auto it = schemas.find(name); it != schemas.end()) {
			p.schema = it->second;
		}
		plan.add_node({name, OpKind::DataSource, std::move(p), {}});
	}
	for (const auto &s : doc.steps) {
		std::vector<Edge> inputs;
		for (const auto &in : s.inputs) {
			inputs.push_back({in, Port::Out});
		}
		plan.add_node({s.id, s.op, s.params, std::move(inputs)});
	}

	Edge train {final_relation(doc), Port::Out};
	Edge test;
	if (doc.split) {
		plan.add_node({"__split", OpKind::Split, *doc.split, {train}});
		train = {"__split", Port::Train};
		test = {"__split", Port::Test};
	} else {
		test = {*doc.test_dataset, Port::Out};
	}

	auto keys = feature_keys(doc);
	std::vector<Edge> x_train, x_test;
	for (std::size_t i = 0; i < doc.featurize.size(); i++) {
		const auto &f = doc.featurize[i];
		EncoderParams p {keys[i], f.column, f.encoder};
		std::string fit = "__fit_" + keys[i];
		plan.add_node({fit, OpKind::EstimatorFit, p, {train}});
		plan.add_node({"__tf_" + keys[i] + "_train", OpKind::Transform, p, {{fit, Port::Out}, train}});
		plan.add_node({"__tf_" + keys[i] + "_test", OpKind::Transform, p, {{fit, Port::Out}, test}});
		x_train.push_back({"__tf_" + keys[i] + "_train", Port::Out});
		x_test.push_back({"__tf_" + keys[i] + "_test", Port::Out});
	}
	Edge xt = x_train.front(), xs = x_test.front();
	if (doc.featurize.size() > 1) {
		plan.add_node({"__concat_train", OpKind::Concat, std::monostate {}, x_train});
		plan.add_node({"__concat_test", OpKind::Concat, std::monostate {}, x_test});
		xt = {"__concat_train", Port::Out};
		xs = {"__concat_test", Port::Out};
	}

	plan.add_node({"__label_train", OpKind::LabelExtract, LabelParams {doc.label.column, doc.label.positive, {}}, {train}});
	std::optional<std::string> group;
	if (doc.sensitive) {
		group = doc.sensitive->column;
	}
	plan.add_node(
	    {"__label_test", OpKind::LabelExtract, LabelParams {doc.label.column, doc.label.positive, group}, {test}});
	plan.add_node({"__train", OpKind::TrainModel, doc.model, {xt, {"__label_train", Port::Out}}});
	plan.add_node({"__predict", OpKind::Predict, std::monostate {}, {{"__train", Port::Out}, xs}});
	std::optional<std::string> privileged;
	if (doc.sensitive) {
		privileged = doc.sensitive->privileged;
	}
	plan.add_node({"__score",
	               OpKind::Score,
	               ScoreParams {doc.metrics, privileged},
	               {{"__predict", Port::Out}, {"__label_test", Port::Out}}});
	plan.set_sinks({"__score"});

	auto diags = validate(plan);
	if (!diags.empty()) {
		const auto &d = diags.front();
		throw SemanticError(doc_path_for(doc, keys, d.node), d.node + ": " + d.message);
	}
	return plan;
}

Plan with_seed(const Plan &plan, std::uint64_t seed) {
	Plan out = plan;
	for (const auto &[id, n] : plan.nodes()) {
		auto &node = out.node(id);
		if (node.kind == OpKind::Split) {
			node.get<SplitParams>().seed = seed;
		} else if (node.kind == OpKind::TrainModel) {
			node.get<ModelConfig>().seed = seed;
		}
	}
	return out;
}

} // namespace pipelens
