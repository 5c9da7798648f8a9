#pragma once

#include "pipelens/relation.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pipelens {

inline constexpr double kDecisionThreshold = 0.5;

inline constexpr std::string_view kAccuracy = "accuracy";
inline constexpr std::string_view kDemographicParity = "demographic_parity_difference";

bool is_known_metric(std::string_view name);

//! Metric name -> value; holds exactly the requested metrics.
struct ScoreReport {
	std::map<std::string, double> metrics;

	double at(const std::string &name) const {
		return metrics.at(name);
	}
	bool operator==(const ScoreReport &) const = default;
};

nlohmann::json to_json(const ScoreReport &report);

//! Share of rows whose thresholded prediction equals the label.
double accuracy(std::span<const double> probabilities, std::span<const double> labels);

//! P(yhat = 1 | unprivileged) - P(yhat = 1 | privileged). Rows with a Null
//! group are ignored; every other group counts as unprivileged. Throws
//! MissingGroup when no row is privileged, UndefinedRate when no row is
//! unprivileged.
double demographic_parity_difference(std::span<const double> probabilities, std::span<const Value> groups,
                                     const std::string &privileged);

//! Evaluates the named metrics. Throws EmptyTestSet on zero rows and
//! AlignmentError when predictions and labels disagree in row ids.
ScoreReport compute_metrics(const std::vector<std::string> &metrics, const Predictions &predictions,
                            const LabelVector &labels, const std::optional<std::string> &privileged);

struct SliceScore {
	std::size_t rows = 0;
	double accuracy = 0.0;
};

struct SliceReport {
	std::string column;
	std::map<Value, SliceScore, ValueLess> groups;
	double overall = 0.0;
};

//! Per-group accuracy, grouping each prediction by the `column` value of its
//! row in `test`. Throws AlignmentError when a prediction's row id is absent
//! from `test` or labels are misaligned.
SliceReport slice_scores(const Predictions &predictions, const LabelVector &labels, const Relation &test,
                         const std::string &column);

nlohmann::json to_json(const SliceReport &report);
nlohmann::json value_to_json(const Value &v);

} // namespace pipelens
