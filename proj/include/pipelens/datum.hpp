#pragma once

#include "pipelens/featurize.hpp"
#include "pipelens/metrics.hpp"
#include "pipelens/models.hpp"
#include "pipelens/relation.hpp"

#include <variant>
#include <vector>

namespace pipelens {

//! Output of an EstimatorFit: the statistics plus one summary annotation per
//! active inspection covering every consumed row.
struct FittedEncoder {
	FittedStats stats;
	std::vector<Annotation> summary;
};

//! Output of a TrainModel, summarized like FittedEncoder.
struct TrainedModel {
	Model model;
	std::vector<Annotation> summary;
};

//! A value flowing along one plan edge at run time.
using Datum = std::variant<Relation, FittedEncoder, FeatureMatrix, LabelVector, TrainedModel, Predictions, ScoreReport>;

//! Per-row annotations of a datum, or nullptr when it has no rows.
const AnnotationTable *annotations_of(const Datum &d);

//! Row count of a row-shaped datum; 1 for stats, models and reports.
std::size_t row_count(const Datum &d);

} // namespace pipelens
