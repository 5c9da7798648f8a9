#include "pipelens/featurize.hpp"

#include "pipelens/errors.hpp"

#include <algorithm>
#include <cmath>

namespace pipelens {

std::string_view to_string(Encoder encoder) {
	switch (encoder) {
	case Encoder::OneHot:
		return "one_hot";
	case Encoder::StandardScale:
		return "standard_scale";
	}
	return "?";
}

std::optional<Encoder> encoder_from_string(std::string_view name) {
	if (name == "one_hot") {
		return Encoder::OneHot;
	}
	if (name == "standard_scale") {
		return Encoder::StandardScale;
	}
	return std::nullopt;
}

namespace {

std::size_t column_index(const Relation &relation, const std::string &column) {
	auto idx = relation.schema.index_of(column);
	if (!idx) {
		throw UnknownColumn("", column);
	}
	return *idx;
}

double numeric_cell(const Value &v, const std::string &column, const RowId &id) {
	if (!v.is_numeric()) {
		throw NonNumeric(column, id.to_string());
	}
	return v.as_number();
}

} // namespace

FittedStats fit_encoder(const Relation &relation, const std::string &column, Encoder encoder) {
	std::size_t idx = column_index(relation, column);
	if (encoder == Encoder::OneHot) {
		OneHotStats stats;
		for (const auto &row : relation.rows) {
			if (!row[idx].is_null()) {
				stats.categories.push_back(row[idx].to_text());
			}
		}
		std::sort(stats.categories.begin(), stats.categories.end());
		stats.categories.erase(std::unique(stats.categories.begin(), stats.categories.end()),
		                       stats.categories.end());
		return FittedStats {column, std::move(stats)};
	}

	std::vector<double> values;
	values.reserve(relation.size());
	for (std::size_t r = 0; r < relation.size(); r++) {
		const auto &v = relation.rows[r][idx];
		if (!v.is_null()) {
			values.push_back(numeric_cell(v, column, relation.row_ids[r]));
		}
	}
	ScalerStats stats;
	if (!values.empty()) {
		double sum = 0.0;
		for (double v : values) {
			sum += v;
		}
		stats.mean = sum / static_cast<double>(values.size());
		double sq = 0.0;
		for (double v : values) {
			sq += (v - stats.mean) * (v - stats.mean);
		}
		stats.std = std::max(std::sqrt(sq / static_cast<double>(values.size())), kScalerStdFloor);
	}
	return FittedStats {column, stats};
}

FeatureMatrix transform(const FittedStats &fitted, const Relation &relation, const std::string &feature,
                        TransformStats *stats) {
	std::size_t idx = column_index(relation, fitted.column);
	TransformStats local;
	TransformStats &counts = stats ? *stats : local;

	FeatureMatrix out;
	out.n_rows = relation.size();
	out.row_ids = relation.row_ids;
	if (const auto *onehot = std::get_if<OneHotStats>(&fitted.stats)) {
		const auto &cats = onehot->categories;
		out.n_cols = cats.size();
		out.data.assign(out.n_rows * out.n_cols, 0.0);
		for (std::size_t r = 0; r < relation.size(); r++) {
			const auto &v = relation.rows[r][idx];
			if (v.is_null()) {
				counts.nulls++;
				continue;
			}
			std::string text = v.to_text();
			auto it = std::lower_bound(cats.begin(), cats.end(), text);
			if (it == cats.end() || *it != text) {
				counts.unseen++;
				if (std::find(counts.unseen_values.begin(), counts.unseen_values.end(), text) ==
				    counts.unseen_values.end()) {
					counts.unseen_values.push_back(text);
				}
				continue;
			}
			out.at(r, static_cast<std::size_t>(it - cats.begin())) = 1.0;
		}
	} else {
		const auto &scaler = std::get<ScalerStats>(fitted.stats);
		out.n_cols = 1;
		out.data.assign(out.n_rows, 0.0);
		for (std::size_t r = 0; r < relation.size(); r++) {
			const auto &v = relation.rows[r][idx];
			if (v.is_null()) {
				counts.nulls++;
				continue;
			}
			out.data[r] = (numeric_cell(v, fitted.column, relation.row_ids[r]) - scaler.mean) / scaler.std;
		}
	}
	for (std::size_t c = 0; c < out.n_cols; c++) {
		out.columns.push_back(feature + "__f" + std::to_string(c));
	}
	return out;
}

nlohmann::json to_json(const FittedStats &fitted) {
	nlohmann::json j;
	j["column"] = fitted.column;
	if (const auto *onehot = std::get_if<OneHotStats>(&fitted.stats)) {
		j["encoder"] = "one_hot";
		j["categories"] = onehot->categories;
	} else {
		const auto &s = std::get<ScalerStats>(fitted.stats);
		j["encoder"] = "standard_scale";
		j["mean"] = s.mean;
		j["std"] = s.std;
	}
	return j;
}

} // namespace pipelens
