#include "pipelens/metrics.hpp"

#include "pipelens/errors.hpp"

#include <unordered_map>

namespace pipelens {

bool is_known_metric(std::string_view name) {
	return name == kAccuracy || name == kDemographicParity;
}

nlohmann::json to_json(const ScoreReport &report) {
	nlohmann::json j = nlohmann::json::object();
	for (const auto &[name, v] : report.metrics) {
		j[name] = v;
	}
	return j;
}

double accuracy(std::span<const double> probabilities, std::span<const double> labels) {
	if (probabilities.size() != labels.size()) {
		throw DimensionMismatch("predictions and labels differ in length");
	}
	if (probabilities.empty()) {
		throw EmptyTestSet();
	}
	std::size_t correct = 0;
	for (std::size_t i = 0; i < probabilities.size(); i++) {
		double predicted = probabilities[i] >= kDecisionThreshold ? 1.0 : 0.0;
		correct += predicted == labels[i] ? 1 : 0;
	}
	return static_cast<double>(correct) / static_cast<double>(probabilities.size());
}

double demographic_parity_difference(std::span<const double> probabilities, std::span<const Value> groups,
                                     const std::string &privileged) {
	if (probabilities.size() != groups.size()) {
		throw DimensionMismatch("predictions and groups differ in length");
	}
	std::size_t priv_rows = 0, priv_pos = 0, unpriv_rows = 0, unpriv_pos = 0;
	for (std::size_t i = 0; i < probabilities.size(); i++) {
		if (groups[i].is_null()) {
			continue;
		}
		bool positive = probabilities[i] >= kDecisionThreshold;
		if (groups[i].to_text() == privileged) {
			priv_rows++;
			priv_pos += positive ? 1 : 0;
		} else {
			unpriv_rows++;
			unpriv_pos += positive ? 1 : 0;
		}
	}
	if (priv_rows == 0) {
		throw MissingGroup(privileged);
	}
	if (unpriv_rows == 0) {
		throw UndefinedRate("no rows outside privileged group '" + privileged + "'");
	}
	return static_cast<double>(unpriv_pos) / static_cast<double>(unpriv_rows) -
	       static_cast<double>(priv_pos) / static_cast<double>(priv_rows);
}

namespace {

void check_alignment(const Predictions &predictions, const LabelVector &labels) {
	if (predictions.size() != labels.size()) {
		throw AlignmentError("predictions have " + std::to_string(predictions.size()) + " rows but labels have " +
		                     std::to_string(labels.size()));
	}
	for (std::size_t i = 0; i < predictions.size(); i++) {
		if (predictions.row_ids[i] != labels.row_ids[i]) {
			throw AlignmentError("prediction row " + predictions.row_ids[i].to_string() + " does not match label row " +
			                     labels.row_ids[i].to_string());
		}
	}
}

} // namespace

ScoreReport compute_metrics(const std::vector<std::string> &metrics, const Predictions &predictions,
                            const LabelVector &labels, const std::optional<std::string> &privileged) {
	check_alignment(predictions, labels);
	if (predictions.size() == 0) {
		throw EmptyTestSet();
	}
	ScoreReport report;
	for (const auto &m : metrics) {
		if (m == kAccuracy) {
			report.metrics[m] = accuracy(predictions.probabilities, labels.values);
		} else if (m == kDemographicParity) {
			if (!privileged || labels.groups.size() != labels.size()) {
				throw Error("demographic_parity_difference needs a sensitive attribute with a privileged group");
			}
			report.metrics[m] = demographic_parity_difference(predictions.probabilities, labels.groups, *privileged);
		} else {
			throw Error("unknown metric '" + m + "'");
		}
	}
	return report;
}

SliceReport slice_scores(const Predictions &predictions, const LabelVector &labels, const Relation &test,
                         const std::string &column) {
	check_alignment(predictions, labels);
	auto idx = test.schema.index_of(column);
	if (!idx) {
		throw UnknownColumn("", column);
	}
	std::map<RowId, std::size_t> position;
	for (std::size_t r = 0; r < test.size(); r++) {
		position.emplace(test.row_ids[r], r);
	}
	struct Tally {
		std::size_t rows = 0;
		std::size_t correct = 0;
	};
	std::map<Value, Tally, ValueLess> tallies;
	std::size_t correct_total = 0;
	for (std::size_t i = 0; i < predictions.size(); i++) {
		auto it = position.find(predictions.row_ids[i]);
		if (it == position.end()) {
			throw AlignmentError("prediction row " + predictions.row_ids[i].to_string() +
			                     " is missing from the test relation");
		}
		const Value &group = test.rows[it->second][*idx];
		bool correct = (predictions.probabilities[i] >= kDecisionThreshold ? 1.0 : 0.0) == labels.values[i];
		auto &t = tallies[group];
		t.rows++;
		t.correct += correct ? 1 : 0;
		correct_total += correct ? 1 : 0;
	}
	SliceReport report;
	report.column = column;
	for (const auto &[group, t] : tallies) {
		report.groups[group] = SliceScore {t.rows, static_cast<double>(t.correct) / static_cast<double>(t.rows)};
	}
	report.overall =
	    predictions.size() == 0 ? 0.0 : static_cast<double>(correct_total) / static_cast<double>(predictions.size());
	return report;
}

nlohmann::json value_to_json(const Value &v) {
	switch (v.type()) {
	case ValueType::Null:
		return nullptr;
	case ValueType::Bool:
		return v.as_bool();
	case ValueType::Int:
		return v.as_int();
	case ValueType::Float:
		return v.as_float();
	case ValueType::Text:
		return v.as_text();
	}
	return nullptr;
}

nlohmann::json to_json(const SliceReport &report) {
	nlohmann::json groups = nlohmann::json::array();
	for (const auto &[group, s] : report.groups) {
		groups.push_back({{"group", value_to_json(group)}, {"rows", s.rows}, {"accuracy", s.accuracy}});
	}
	return {{"column", report.column}, {"groups", groups}, {"overall", report.overall}};
}

} // namespace pipelens
