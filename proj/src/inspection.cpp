#include "pipelens/inspection.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <limits>
#include <set>

namespace pipelens {

const AnnotationTable *annotations_of(const Datum &d) {
	if (const auto *r = std::get_if<Relation>(&d)) {
		return &r->annotations;
	}
	if (const auto *m = std::get_if<FeatureMatrix>(&d)) {
		return &m->annotations;
	}
	if (const auto *p = std::get_if<Predictions>(&d)) {
		return &p->annotations;
	}
	return nullptr;
}

std::size_t row_count(const Datum &d) {
	return std::visit(
	    [](const auto &v) -> std::size_t {
		    using T = std::decay_t<decltype(v)>;
		    if constexpr (std::is_same_v<T, Relation> || std::is_same_v<T, LabelVector> ||
		                  std::is_same_v<T, Predictions>) {
			    return v.size();
		    } else if constexpr (std::is_same_v<T, FeatureMatrix>) {
			    return v.n_rows;
		    } else {
			    return 1;
		    }
	    },
	    d);
}

bool is_relational(OpKind kind) {
	switch (kind) {
	case OpKind::Selection:
	case OpKind::Projection:
	case OpKind::ExtendedProjection:
	case OpKind::Join:
	case OpKind::Concat:
	case OpKind::Corruption:
		return true;
	default:
		return false;
	}
}

//===--------------------------------------------------------------------===//
// Lineage
//===--------------------------------------------------------------------===//

namespace {

void merge_into(Annotation &acc, const Annotation &a) {
	if (const auto *set = std::get_if<LineageSet>(&a)) {
		if (auto *acc_set = std::get_if<LineageSet>(&acc)) {
			acc_set->merge(*set);
		} else if (auto *acc_digest = std::get_if<LineageDigest>(&acc)) {
			for (const auto &id : *set) {
				acc_digest->add(id);
			}
		} else {
			acc = *set;
		}
	} else if (const auto *digest = std::get_if<LineageDigest>(&a)) {
		// a digest absorbs everything; counts add up as an upper bound
		LineageDigest merged = *digest;
		if (const auto *acc_set = std::get_if<LineageSet>(&acc)) {
			for (const auto &id : *acc_set) {
				merged.add(id);
			}
		} else if (const auto *acc_digest = std::get_if<LineageDigest>(&acc)) {
			merged.count += acc_digest->count;
			for (std::size_t i = 0; i < merged.bloom.size(); i++) {
				merged.bloom[i] |= acc_digest->bloom[i];
			}
		}
		acc = merged;
	}
}

void compact(Annotation &a) {
	if (const auto *set = std::get_if<LineageSet>(&a); set && set->size() > kLineageDigestThreshold) {
		LineageDigest d;
		for (const auto &id : *set) {
			d.add(id);
		}
		a = d;
	}
}

nlohmann::json lineage_json(const LineageSet &set) {
	nlohmann::json arr = nlohmann::json::array();
	for (const auto &id : set) {
		arr.push_back(nlohmann::json::array({id.source, id.index}));
	}
	return arr;
}

} // namespace

Annotation LineageInspection::annotate_source(const Relation &source, std::size_t row) {
	return LineageSet(source.row_ids[row]);
}

Annotation LineageInspection::propagate(OpKind, std::span<const Annotation *const> sources) {
	if (sources.size() == 1) {
		return *sources[0];
	}
	Annotation acc;
	for (const auto *a : sources) {
		merge_into(acc, *a);
	}
	return acc;
}

Annotation LineageInspection::summarize(OpKind, std::span<const Annotation *const> rows) {
	Annotation acc = LineageSet();
	for (const auto *a : rows) {
		merge_into(acc, *a);
		compact(acc);
	}
	return acc;
}

void LineageInspection::observe(const Observation &obs) {
	const auto &id = obs.node.id;
	if (const auto *fit = std::get_if<FittedEncoder>(&obs.output)) {
		summaries_[id] = fit->summary.at(obs.slot);
		return;
	}
	if (const auto *model = std::get_if<TrainedModel>(&obs.output)) {
		summaries_[id] = model->summary.at(obs.slot);
		return;
	}
	auto record = [&](const std::string &key, const Datum &d) {
		const auto *table = annotations_of(d);
		if (!table) {
			return;
		}
		std::vector<LineageSet> rows;
		rows.reserve(table->rows());
		for (std::size_t r = 0; r < table->rows(); r++) {
			const auto &a = table->at(r, obs.slot);
			rows.push_back(std::holds_alternative<LineageSet>(a) ? std::get<LineageSet>(a) : LineageSet());
		}
		per_node_[key] = std::move(rows);
		if (std::holds_alternative<Relation>(d)) {
			relational_.push_back(key);
		}
	};
	if (obs.test_output) {
		record(id + "#train", obs.output);
		record(id + "#test", *obs.test_output);
	} else {
		record(id, obs.output);
	}
}

const std::vector<LineageSet> &LineageInspection::lineage(const std::string &node) const {
	static const std::vector<LineageSet> kEmpty;
	auto it = per_node_.find(node);
	return it == per_node_.end() ? kEmpty : it->second;
}

const Annotation *LineageInspection::summary(const std::string &node) const {
	auto it = summaries_.find(node);
	return it == summaries_.end() ? nullptr : &it->second;
}

nlohmann::json LineageInspection::result() const {
	nlohmann::json out = nlohmann::json::object();
	for (const auto &node : relational_) {
		nlohmann::json dump = nlohmann::json::object();
		const auto &rows = per_node_.at(node);
		for (std::size_t r = 0; r < rows.size(); r++) {
			dump[std::to_string(r)] = lineage_json(rows[r]);
		}
		out[node] = std::move(dump);
	}
	return out;
}

//===--------------------------------------------------------------------===//
// Group histograms
//===--------------------------------------------------------------------===//

Annotation HistogramInspection::annotate_source(const Relation &source, std::size_t row) {
	auto idx = source.schema.index_of(column_);
	return idx ? source.rows[row][*idx] : Value();
}

Annotation HistogramInspection::propagate(OpKind, std::span<const Annotation *const> sources) {
	for (const auto *a : sources) {
		if (const auto *v = std::get_if<Value>(a); v && !v->is_null()) {
			return *v;
		}
	}
	return Value();
}

Annotation HistogramInspection::summarize(OpKind, std::span<const Annotation *const>) {
	return std::monostate {};
}

namespace {

GroupHistogram histogram_of(const AnnotationTable &table, std::size_t slot) {
	GroupHistogram h;
	for (std::size_t r = 0; r < table.rows(); r++) {
		const auto *v = std::get_if<Value>(&table.at(r, slot));
		h[v ? *v : Value()]++;
	}
	return h;
}

bool has_groups(const GroupHistogram &h) {
	for (const auto &[group, count] : h) {
		if (!group.is_null() && count > 0) {
			return true;
		}
	}
	return false;
}

} // namespace

void HistogramInspection::observe(const Observation &obs) {
	if (!is_relational(obs.node.kind) && obs.node.kind != OpKind::Transform) {
		return;
	}
	const auto *out_table = annotations_of(obs.output);
	if (!out_table) {
		return;
	}
	NodeHistograms rec;
	rec.node = obs.node.id;
	rec.kind = obs.node.kind;
	rec.output = histogram_of(*out_table, obs.slot);
	// the input side is the first input that carries groups at all
	std::optional<GroupHistogram> fallback;
	bool chosen = false;
	for (const auto *in : obs.inputs) {
		const auto *t = annotations_of(*in);
		if (!t) {
			continue;
		}
		auto h = histogram_of(*t, obs.slot);
		if (has_groups(h)) {
			rec.input = std::move(h);
			chosen = true;
			break;
		}
		if (!fallback) {
			fallback = std::move(h);
		}
	}
	if (!chosen && fallback) {
		rec.input = std::move(*fallback);
	}
	histograms_.push_back(std::move(rec));
}

namespace {

nlohmann::json histogram_json(const GroupHistogram &h) {
	nlohmann::json arr = nlohmann::json::array();
	for (const auto &[group, count] : h) {
		arr.push_back({{"group", value_to_json(group)}, {"count", count}});
	}
	return arr;
}

} // namespace

nlohmann::json HistogramInspection::result() const {
	nlohmann::json arr = nlohmann::json::array();
	for (const auto &h : histograms_) {
		arr.push_back({{"node", h.node},
		               {"op", std::string(to_string(h.kind))},
		               {"input", histogram_json(h.input)},
		               {"output", histogram_json(h.output)}});
	}
	return {{"column", column_}, {"nodes", arr}};
}

std::vector<DistributionFinding> check_distributions(const std::vector<NodeHistograms> &histograms, double tau) {
	std::vector<DistributionFinding> findings;
	for (const auto &h : histograms) {
		if (!is_relational(h.kind)) {
			continue;
		}
		std::size_t before_total = 0, after_total = 0;
		for (const auto &[g, c] : h.input) {
			before_total += c;
		}
		for (const auto &[g, c] : h.output) {
			after_total += c;
		}
		if (before_total == 0) {
			continue;
		}
		std::set<Value, ValueLess> groups;
		for (const auto &[g, c] : h.input) {
			groups.insert(g);
		}
		for (const auto &[g, c] : h.output) {
			groups.insert(g);
		}
		for (const auto &g : groups) {
			auto count = [&](const GroupHistogram &m) -> std::size_t {
				auto it = m.find(g);
				return it == m.end() ? 0 : it->second;
			};
			std::size_t before = count(h.input), after = count(h.output);
			if (before == 0 && after == 0) {
				continue;
			}
			DistributionFinding f;
			f.node = h.node;
			f.group = g;
			f.proportion_before = static_cast<double>(before) / static_cast<double>(before_total);
			f.proportion_after =
			    after_total == 0 ? 0.0 : static_cast<double>(after) / static_cast<double>(after_total);
			f.ratio = before == 0 ? std::numeric_limits<double>::infinity() : f.proportion_after / f.proportion_before;
			f.flagged = f.ratio < tau || f.ratio > 1.0 / tau;
			findings.push_back(std::move(f));
		}
	}
	std::stable_sort(findings.begin(), findings.end(), [](const auto &a, const auto &b) {
		if (a.node != b.node) {
			return a.node < b.node;
		}
		return total_order(a.group, b.group) < 0;
	});
	return findings;
}

nlohmann::json to_json(const DistributionFinding &f) {
	return {{"node", f.node},
	        {"group", value_to_json(f.group)},
	        {"proportion_before", f.proportion_before},
	        {"proportion_after", f.proportion_after},
	        {"ratio", std::isfinite(f.ratio) ? nlohmann::json(f.ratio) : nlohmann::json(nullptr)},
	        {"flagged", f.flagged}};
}

nlohmann::json to_json(const std::vector<DistributionFinding> &findings) {
	nlohmann::json arr = nlohmann::json::array();
	for (const auto &f : findings) {
		arr.push_back(to_json(f));
	}
	return arr;
}

} // namespace pipelens
