#pragma once

#include "pipelens/relation.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pipelens {

enum class Encoder { OneHot, StandardScale };

std::string_view to_string(Encoder encoder);
std::optional<Encoder> encoder_from_string(std::string_view name);

inline constexpr double kScalerStdFloor = 1e-12;

struct OneHotStats {
	//! Sorted, unique canonical texts of the non-null training values.
	std::vector<std::string> categories;
	bool operator==(const OneHotStats &) const = default;
};

struct ScalerStats {
	double mean = 0.0;
	//! Population standard deviation, floored at kScalerStdFloor.
	double std = 1.0;
	bool operator==(const ScalerStats &) const = default;
};

//! Statistics an estimator computes over the training relation.
struct FittedStats {
	std::string column;
	std::variant<OneHotStats, ScalerStats> stats;

	bool operator==(const FittedStats &) const = default;
};

//! Global aggregation over `column`; Null cells are ignored. Throws
//! UnknownColumn, or NonNumeric when scaling meets a non-numeric value.
FittedStats fit_encoder(const Relation &relation, const std::string &column, Encoder encoder);

struct TransformStats {
	std::size_t unseen = 0;
	std::size_t nulls = 0;
	//! Distinct unseen categories in first-seen order.
	std::vector<std::string> unseen_values;
};

//! Tuple-at-a-time application of fitted statistics. Output columns are
//! named `<feature>__f<i>`. Unseen categories and Null cells encode to zeros
//! and are counted in `stats`.
FeatureMatrix transform(const FittedStats &fitted, const Relation &relation, const std::string &feature,
                        TransformStats *stats = nullptr);

nlohmann::json to_json(const FittedStats &fitted);

} // namespace pipelens
