#include "pipelens/executor.hpp"

#include "pipelens/csv.hpp"
#include "pipelens/errors.hpp"
#include "pipelens/hash.hpp"
#include "pipelens/pipeline.hpp"

#include <chrono>
#include <set>
#include <unordered_map>

namespace pipelens {

nlohmann::json to_json(const ExecutionTrace &trace) {
	nlohmann::json nodes = nlohmann::json::array();
	for (const auto &n : trace.nodes) {
		nlohmann::json j = {{"node", n.node}, {"op", std::string(to_string(n.kind))}, {"rows", n.rows}};
		if (n.test_rows) {
			j["test_rows"] = *n.test_rows;
		}
		if (!n.warnings.empty()) {
			j["warnings"] = n.warnings;
		}
		nodes.push_back(std::move(j));
	}
	return {{"nodes", nodes}, {"operator_count", trace.operator_count}, {"peak_live", trace.peak_live}};
}

namespace {

template <class T>
const T &input_as(const PlanNode &node, const std::vector<const Datum *> &inputs, std::size_t i) {
	const auto *v = std::get_if<T>(inputs.at(i));
	if (!v) {
		throw Error("node '" + node.id + "': input " + std::to_string(i) + " has the wrong kind");
	}
	return *v;
}

AnnotationTable gather(const AnnotationTable &in, const std::vector<std::size_t> &rows) {
	AnnotationTable out(rows.size(), in.width());
	for (std::size_t r = 0; r < rows.size(); r++) {
		for (std::size_t s = 0; s < in.width(); s++) {
			out.at(r, s) = in.at(rows[r], s);
		}
	}
	return out;
}

Relation take_rows(const Relation &in, const std::vector<std::size_t> &rows) {
	Relation out;
	out.schema = in.schema;
	out.rows.reserve(rows.size());
	out.row_ids.reserve(rows.size());
	for (auto r : rows) {
		out.rows.push_back(in.rows[r]);
		out.row_ids.push_back(in.row_ids[r]);
	}
	out.annotations = gather(in.annotations, rows);
	return out;
}

std::vector<Annotation> summarize_all(const std::vector<Inspection *> &inspections, OpKind op,
                                      const AnnotationTable &table) {
	std::vector<Annotation> out;
	std::vector<const Annotation *> column(table.rows());
	for (std::size_t s = 0; s < inspections.size(); s++) {
		for (std::size_t r = 0; r < table.rows(); r++) {
			column[r] = &table.at(r, s);
		}
		out.push_back(inspections[s]->summarize(op, column));
	}
	return out;
}

//! Join key normalized so that Int and Float compare by numeric value.
std::optional<std::string> join_key(const Value &v) {
	switch (v.type()) {
	case ValueType::Null:
		return std::nullopt;
	case ValueType::Bool:
		return std::string(v.as_bool() ? "b:1" : "b:0");
	case ValueType::Int:
	case ValueType::Float:
		return "n:" + format_double(v.as_number());
	case ValueType::Text:
		return "t:" + v.as_text();
	}
	return std::nullopt;
}

Relation load_source(const PlanNode &node, const ExecuteOptions &options) {
	const auto &p = node.get<DataSourceParams>();
	Relation rel = read_csv(options.data_root / p.path, p.dataset);
	if (p.schema && *p.schema != rel.schema) {
		throw Error("dataset '" + p.dataset + "' no longer matches its bound schema " + p.schema->to_string() +
		            " (found " + rel.schema.to_string() + ")");
	}
	if (options.source_filter) {
		std::vector<std::size_t> keep;
		for (std::size_t r = 0; r < rel.size(); r++) {
			if (options.source_filter(rel.row_ids[r])) {
				keep.push_back(r);
			}
		}
		rel = take_rows(rel, keep);
	}
	const auto &insp = options.inspections;
	rel.annotations = AnnotationTable(rel.size(), insp.size());
	for (std::size_t r = 0; r < rel.size(); r++) {
		for (std::size_t s = 0; s < insp.size(); s++) {
			rel.annotations.at(r, s) = insp[s]->annotate_source(rel, r);
		}
	}
	return rel;
}

Relation eval_join(const PlanNode &node, const Relation &left, const Relation &right,
                   const std::vector<Inspection *> &insp) {
	const auto &key = node.get<JoinParams>().on;
	auto li = left.schema.index_of(key);
	auto ri = right.schema.index_of(key);
	if (!li) {
		throw UnknownColumn(node.id, key);
	}
	if (!ri) {
		throw UnknownColumn(node.id, key);
	}
	std::unordered_map<std::string, std::vector<std::size_t>> index;
	for (std::size_t r = 0; r < right.size(); r++) {
		if (auto k = join_key(right.rows[r][*ri])) {
			index[*k].push_back(r);
		}
	}
	Relation out;
	out.schema = join_schema(left.schema, right.schema, key);
	std::vector<std::pair<std::size_t, std::size_t>> pairs;
	for (std::size_t l = 0; l < left.size(); l++) {
		auto k = join_key(left.rows[l][*li]);
		if (!k) {
			continue;
		}
		auto it = index.find(*k);
		if (it == index.end()) {
			continue;
		}
		for (auto r : it->second) {
			pairs.emplace_back(l, r);
		}
	}
	out.annotations = AnnotationTable(pairs.size(), insp.size());
	for (std::size_t o = 0; o < pairs.size(); o++) {
		auto [l, r] = pairs[o];
		Row row = left.rows[l];
		for (std::size_t c = 0; c < right.schema.size(); c++) {
			if (c != *ri) {
				row.push_back(right.rows[r][c]);
			}
		}
		out.rows.push_back(std::move(row));
		out.row_ids.push_back(left.row_ids[l]);
		for (std::size_t s = 0; s < insp.size(); s++) {
			const Annotation *sources[] = {&left.annotations.at(l, s), &right.annotations.at(r, s)};
			out.annotations.at(o, s) = insp[s]->propagate(OpKind::Join, sources);
		}
	}
	return out;
}

void check_aligned(const PlanNode &node, const std::vector<RowId> &a, const std::vector<RowId> &b) {
	if (a != b) {
		throw AlignmentError("concat '" + node.id + "': inputs are not aligned by row id");
	}
}

AnnotationTable concat_annotations(const std::vector<const AnnotationTable *> &tables,
                                   const std::vector<Inspection *> &insp) {
	std::size_t rows = tables.front()->rows();
	AnnotationTable out(rows, insp.size());
	std::vector<const Annotation *> sources(tables.size());
	for (std::size_t r = 0; r < rows; r++) {
		for (std::size_t s = 0; s < insp.size(); s++) {
			for (std::size_t t = 0; t < tables.size(); t++) {
				sources[t] = &tables[t]->at(r, s);
			}
			out.at(r, s) = insp[s]->propagate(OpKind::Concat, sources);
		}
	}
	return out;
}

Datum eval_concat(const PlanNode &node, const std::vector<const Datum *> &inputs,
                  const std::vector<Inspection *> &insp) {
	std::vector<const AnnotationTable *> tables;
	if (std::holds_alternative<Relation>(*inputs[0])) {
		std::vector<Schema> schemas;
		const auto &first = input_as<Relation>(node, inputs, 0);
		for (std::size_t i = 0; i < inputs.size(); i++) {
			const auto &rel = input_as<Relation>(node, inputs, i);
			check_aligned(node, first.row_ids, rel.row_ids);
			schemas.push_back(rel.schema);
			tables.push_back(&rel.annotations);
		}
		Relation out;
		out.schema = concat_schema(schemas);
		out.row_ids = first.row_ids;
		out.rows.resize(first.size());
		for (std::size_t i = 0; i < inputs.size(); i++) {
			const auto &rel = std::get<Relation>(*inputs[i]);
			for (std::size_t r = 0; r < rel.size(); r++) {
				out.rows[r].insert(out.rows[r].end(), rel.rows[r].begin(), rel.rows[r].end());
			}
		}
		out.annotations = concat_annotations(tables, insp);
		return out;
	}
	const auto &first = input_as<FeatureMatrix>(node, inputs, 0);
	FeatureMatrix out;
	out.n_rows = first.n_rows;
	out.row_ids = first.row_ids;
	for (std::size_t i = 0; i < inputs.size(); i++) {
		const auto &m = input_as<FeatureMatrix>(node, inputs, i);
		check_aligned(node, first.row_ids, m.row_ids);
		out.n_cols += m.n_cols;
		out.columns.insert(out.columns.end(), m.columns.begin(), m.columns.end());
		tables.push_back(&m.annotations);
	}
	out.data.reserve(out.n_rows * out.n_cols);
	for (std::size_t r = 0; r < out.n_rows; r++) {
		for (std::size_t i = 0; i < inputs.size(); i++) {
			auto row = std::get<FeatureMatrix>(*inputs[i]).row(r);
			out.data.insert(out.data.end(), row.begin(), row.end());
		}
	}
	out.annotations = concat_annotations(tables, insp);
	return out;
}

std::string join_list(const std::vector<std::string> &items) {
	std::string out;
	for (const auto &s : items) {
		out += (out.empty() ? "" : ", ") + s;
	}
	return out;
}

} // namespace

NodeOutputs eval_operator(const PlanNode &node, const std::vector<const Datum *> &inputs,
                          const ExecuteOptions &options, std::vector<std::string> *warnings) {
	const auto &insp = options.inspections;
	NodeOutputs out;
	auto single = [&](Datum d) {
		out.emplace_back(Port::Out, std::move(d));
		return out;
	};

	switch (node.kind) {
	case OpKind::DataSource:
		return single(load_source(node, options));
	case OpKind::Selection: {
		const auto &in = input_as<Relation>(node, inputs, 0);
		const auto &pred = node.get<SelectionParams>().predicate;
		std::vector<std::size_t> keep;
		for (std::size_t r = 0; r < in.size(); r++) {
			try {
				if (pred.evaluate(in.schema, in.rows[r])) {
					keep.push_back(r);
				}
			} catch (const UnknownColumn &e) {
				throw UnknownColumn(node.id, e.column);
			}
		}
		return single(take_rows(in, keep));
	}
	case OpKind::Projection: {
		const auto &in = input_as<Relation>(node, inputs, 0);
		std::vector<std::size_t> idx;
		std::vector<Column> cols;
		for (const auto &c : node.get<ProjectionParams>().columns) {
			auto i = in.schema.index_of(c);
			if (!i) {
				throw UnknownColumn(node.id, c);
			}
			idx.push_back(*i);
			cols.push_back(in.schema[*i]);
		}
		Relation rel;
		rel.schema = Schema(std::move(cols));
		rel.row_ids = in.row_ids;
		rel.annotations = in.annotations;
		rel.rows.reserve(in.size());
		for (const auto &row : in.rows) {
			Row projected;
			projected.reserve(idx.size());
			for (auto i : idx) {
				projected.push_back(row[i]);
			}
			rel.rows.push_back(std::move(projected));
		}
		return single(std::move(rel));
	}
	case OpKind::ExtendedProjection: {
		const auto &in = input_as<Relation>(node, inputs, 0);
		const auto &p = node.get<ExtendedProjectionParams>();
		if (in.schema.contains(p.output)) {
			throw Error("node '" + node.id + "': output column '" + p.output + "' already exists");
		}
		Relation rel = in;
		auto cols = in.schema.columns();
		cols.push_back({p.output, ValueType::Bool});
		rel.schema = Schema(std::move(cols));
		for (std::size_t r = 0; r < in.size(); r++) {
			try {
				rel.rows[r].push_back(Value(p.expr.evaluate(in.schema, in.rows[r])));
			} catch (const UnknownColumn &e) {
				throw UnknownColumn(node.id, e.column);
			}
		}
		return single(std::move(rel));
	}
	case OpKind::Join:
		return single(
		    eval_join(node, input_as<Relation>(node, inputs, 0), input_as<Relation>(node, inputs, 1), insp));
	case OpKind::Concat:
		return single(eval_concat(node, inputs, insp));
	case OpKind::Split: {
		const auto &in = input_as<Relation>(node, inputs, 0);
		const auto &p = node.get<SplitParams>();
		std::vector<std::size_t> train, test;
		for (std::size_t r = 0; r < in.size(); r++) {
			(split_assign(in.row_ids[r], p.seed, p.test_fraction) == SplitSide::Test ? test : train).push_back(r);
		}
		out.emplace_back(Port::Train, take_rows(in, train));
		out.emplace_back(Port::Test, take_rows(in, test));
		return out;
	}
	case OpKind::Corruption: {
		const auto &p = node.get<CorruptionParams>();
		try {
			return single(corrupt(input_as<Relation>(node, inputs, 0), p.column, p.kind, p.fraction, p.factor, p.seed));
		} catch (const UnknownColumn &e) {
			throw UnknownColumn(node.id, e.column);
		}
	}
	case OpKind::EstimatorFit: {
		const auto &in = input_as<Relation>(node, inputs, 0);
		const auto &p = node.get<EncoderParams>();
		FittedEncoder fit;
		try {
			fit.stats = fit_encoder(in, p.column, p.encoder);
		} catch (const UnknownColumn &e) {
			throw UnknownColumn(node.id, e.column);
		}
		fit.summary = summarize_all(insp, node.kind, in.annotations);
		return single(std::move(fit));
	}
	case OpKind::Transform: {
		const auto &fit = input_as<FittedEncoder>(node, inputs, 0);
		const auto &in = input_as<Relation>(node, inputs, 1);
		const auto &p = node.get<EncoderParams>();
		TransformStats stats;
		FeatureMatrix m;
		try {
			m = transform(fit.stats, in, p.feature, &stats);
		} catch (const UnknownColumn &e) {
			throw UnknownColumn(node.id, e.column);
		}
		m.annotations = in.annotations;
		if (warnings && stats.unseen > 0) {
			warnings->push_back(std::to_string(stats.unseen) + " value(s) of '" + p.column +
			                    "' unseen at fit time encoded as zeros: " + join_list(stats.unseen_values));
		}
		if (warnings && stats.nulls > 0) {
			warnings->push_back(std::to_string(stats.nulls) + " null value(s) of '" + p.column +
			                    "' encoded as zeros");
		}
		return single(std::move(m));
	}
	case OpKind::LabelExtract: {
		const auto &in = input_as<Relation>(node, inputs, 0);
		const auto &p = node.get<LabelParams>();
		auto li = in.schema.index_of(p.column);
		if (!li) {
			throw UnknownColumn(node.id, p.column);
		}
		std::optional<std::size_t> gi;
		if (p.group_column) {
			gi = in.schema.index_of(*p.group_column);
			if (!gi) {
				throw UnknownColumn(node.id, *p.group_column);
			}
		}
		LabelVector y;
		y.row_ids = in.row_ids;
		y.values.reserve(in.size());
		for (std::size_t r = 0; r < in.size(); r++) {
			const auto &v = in.rows[r][*li];
			if (v.is_null()) {
				throw MissingLabel(in.row_ids[r].to_string());
			}
			y.values.push_back(v.to_text() == p.positive ? 1.0 : 0.0);
			if (gi) {
				y.groups.push_back(in.rows[r][*gi]);
			}
		}
		return single(std::move(y));
	}
	case OpKind::TrainModel: {
		const auto &x = input_as<FeatureMatrix>(node, inputs, 0);
		const auto &y = input_as<LabelVector>(node, inputs, 1);
		if (x.row_ids != y.row_ids) {
			throw AlignmentError("train '" + node.id + "': features and labels are not aligned by row id");
		}
		TrainedModel m {train_model(x, y, node.get<ModelConfig>()), summarize_all(insp, node.kind, x.annotations)};
		return single(std::move(m));
	}
	case OpKind::Predict: {
		const auto &m = input_as<TrainedModel>(node, inputs, 0);
		const auto &x = input_as<FeatureMatrix>(node, inputs, 1);
		Predictions p;
		p.probabilities = predict(m.model, x);
		p.row_ids = x.row_ids;
		p.annotations = x.annotations;
		return single(std::move(p));
	}
	case OpKind::Score: {
		const auto &p = node.get<ScoreParams>();
		return single(compute_metrics(p.metrics, input_as<Predictions>(node, inputs, 0),
		                              input_as<LabelVector>(node, inputs, 1), p.privileged));
	}
	}
	throw Error("unsupported operator");
}

ScheduleResult run_schedule(const Plan &plan, const std::vector<std::string> &order, const std::vector<Edge> &keep,
                            const ExecuteOptions &options) {
	ScheduleResult result;
	std::map<std::string, std::size_t> refs;
	for (const auto &id : order) {
		for (const auto &e : plan.node(id).inputs) {
			refs[e.to_string()]++;
		}
	}
	std::set<std::string> kept;
	for (const auto &e : keep) {
		kept.insert(e.to_string());
	}

	std::map<std::string, Datum> live;
	std::map<std::string, std::exception_ptr> failed;
	auto release = [&](const std::string &key) {
		auto it = refs.find(key);
		if (it == refs.end() || it->second == 0) {
			if (!kept.count(key)) {
				live.erase(key);
			}
		}
	};

	for (const auto &id : order) {
		const auto &node = plan.node(id);
		std::exception_ptr upstream;
		std::vector<const Datum *> inputs;
		for (const auto &e : node.inputs) {
			auto key = e.to_string();
			if (auto f = failed.find(key); f != failed.end()) {
				upstream = f->second;
				break;
			}
			auto it = live.find(key);
			if (it == live.end()) {
				throw Error("schedule evaluates '" + id + "' before its input '" + key + "'");
			}
			inputs.push_back(&it->second);
		}

		std::vector<std::string> out_keys;
		if (node.kind == OpKind::Split) {
			out_keys = {Edge {id, Port::Train}.to_string(), Edge {id, Port::Test}.to_string()};
		} else {
			out_keys = {id};
		}

		if (!upstream) {
			NodeTrace t;
			t.node = id;
			t.kind = node.kind;
			auto start = std::chrono::steady_clock::now();
			try {
				auto outputs = eval_operator(node, inputs, options, &t.warnings);
				t.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
				t.rows = row_count(outputs[0].second);
				if (outputs.size() > 1) {
					t.test_rows = row_count(outputs[1].second);
				}
				for (std::size_t s = 0; s < options.inspections.size(); s++) {
					options.inspections[s]->observe(
					    {node, s, inputs, outputs[0].second, outputs.size() > 1 ? &outputs[1].second : nullptr});
				}
				for (std::size_t i = 0; i < outputs.size(); i++) {
					live.insert_or_assign(out_keys[i], std::move(outputs[i].second));
				}
			} catch (...) {
				upstream = std::current_exception();
			}
			result.trace.operator_count++;
			result.trace.nodes.push_back(std::move(t));
			result.trace.peak_live = std::max(result.trace.peak_live, live.size());
		}
		if (upstream) {
			for (const auto &k : out_keys) {
				failed[k] = upstream;
			}
		}

		for (const auto &e : node.inputs) {
			auto key = e.to_string();
			if (auto it = refs.find(key); it != refs.end() && it->second > 0) {
				it->second--;
			}
			release(key);
		}
		for (const auto &k : out_keys) {
			release(k);
		}
	}

	for (const auto &key : kept) {
		if (auto f = failed.find(key); f != failed.end()) {
			result.failures[key] = f->second;
		} else if (auto it = live.find(key); it != live.end()) {
			result.values.emplace(key, std::move(it->second));
		}
	}
	return result;
}

namespace {

Plan prepared(const Plan &plan, const ExecuteOptions &options) {
	auto diags = validate(plan);
	if (!diags.empty()) {
		throw InvalidPlan(std::move(diags));
	}
	return options.seed_override ? with_seed(plan, *options.seed_override) : plan;
}

} // namespace

ExecutionResult execute(const Plan &input, const ExecuteOptions &options) {
	Plan plan = prepared(input, options);
	auto sinks = plan.sinks();
	if (sinks.size() != 1) {
		throw Error("execution needs exactly one sink, plan has " + std::to_string(sinks.size()));
	}
	if (plan.node(sinks[0]).kind != OpKind::Score) {
		throw Error("the sink '" + sinks[0] + "' is not a Score node");
	}
	std::vector<Edge> keep {{sinks[0], Port::Out}};
	keep.insert(keep.end(), options.retain.begin(), options.retain.end());
	auto run = run_schedule(plan, topological_order(plan), keep, options);
	for (const auto &e : keep) {
		if (auto f = run.failures.find(e.to_string()); f != run.failures.end()) {
			std::rethrow_exception(f->second);
		}
	}
	ExecutionResult result;
	result.score = std::get<ScoreReport>(run.values.at(sinks[0]));
	run.values.erase(sinks[0]);
	result.retained = std::move(run.values);
	result.trace = std::move(run.trace);
	return result;
}

Datum execute_to(const Plan &input, const Edge &target, const ExecuteOptions &options) {
	Plan plan = options.seed_override ? with_seed(input, *options.seed_override) : input;
	if (!plan.contains(target.node)) {
		throw UnknownTarget(target.node);
	}
	std::set<std::string> needed;
	std::vector<std::string> work {target.node};
	while (!work.empty()) {
		auto id = work.back();
		work.pop_back();
		if (!needed.insert(id).second) {
			continue;
		}
		for (const auto &e : plan.node(id).inputs) {
			work.push_back(e.node);
		}
	}
	std::vector<std::string> order;
	for (const auto &id : topological_order(plan)) {
		if (needed.count(id)) {
			order.push_back(id);
		}
	}
	auto run = run_schedule(plan, order, {target}, options);
	auto key = target.to_string();
	if (auto f = run.failures.find(key); f != run.failures.end()) {
		std::rethrow_exception(f->second);
	}
	return std::move(run.values.at(key));
}

} // namespace pipelens
