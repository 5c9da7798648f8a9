#include "pipelens/models.hpp"

#include "pipelens/errors.hpp"

#include <algorithm>
#include <cmath>

namespace pipelens {

std::string_view to_string(ModelKind kind) {
	switch (kind) {
	case ModelKind::LogisticRegression:
		return "logistic_regression";
	case ModelKind::Majority:
		return "majority";
	case ModelKind::DecisionStump:
		return "decision_stump";
	}
	return "?";
}

std::optional<ModelKind> model_kind_from_string(std::string_view name) {
	for (auto k : {ModelKind::LogisticRegression, ModelKind::Majority, ModelKind::DecisionStump}) {
		if (to_string(k) == name) {
			return k;
		}
	}
	return std::nullopt;
}

double sigmoid(double z) {
	if (z >= 0) {
		return 1.0 / (1.0 + std::exp(-z));
	}
	double e = std::exp(z);
	return e / (1.0 + e);
}

namespace {

void check_shapes(const FeatureMatrix &x, std::size_t n_labels, std::size_t n_weights) {
	if (x.n_rows != n_labels) {
		throw DimensionMismatch("feature matrix has " + std::to_string(x.n_rows) + " rows but " +
		                        std::to_string(n_labels) + " labels");
	}
	if (x.n_cols != n_weights) {
		throw DimensionMismatch("feature matrix has " + std::to_string(x.n_cols) + " columns but model expects " +
		                        std::to_string(n_weights));
	}
}

double logit(std::span<const double> row, std::span<const double> weights, double bias) {
	double z = bias;
	for (std::size_t c = 0; c < row.size(); c++) {
		z += row[c] * weights[c];
	}
	return z;
}

} // namespace

double logreg_loss(const FeatureMatrix &x, std::span<const double> y, std::span<const double> weights, double bias) {
	check_shapes(x, y.size(), weights.size());
	if (x.n_rows == 0) {
		return 0.0;
	}
	double total = 0.0;
	for (std::size_t r = 0; r < x.n_rows; r++) {
		double z = logit(x.row(r), weights, bias);
		// log(1 + e^z) - y z, evaluated without overflow
		total += std::max(z, 0.0) - z * y[r] + std::log1p(std::exp(-std::abs(z)));
	}
	return total / static_cast<double>(x.n_rows);
}

LogregGradient logreg_gradient(const FeatureMatrix &x, std::span<const double> y, std::span<const double> weights,
                               double bias) {
	check_shapes(x, y.size(), weights.size());
	LogregGradient g;
	g.weights.assign(x.n_cols, 0.0);
	if (x.n_rows == 0) {
		return g;
	}
	for (std::size_t r = 0; r < x.n_rows; r++) {
		auto row = x.row(r);
		double residual = sigmoid(logit(row, weights, bias)) - y[r];
		for (std::size_t c = 0; c < x.n_cols; c++) {
			g.weights[c] += residual * row[c];
		}
		g.bias += residual;
	}
	double n = static_cast<double>(x.n_rows);
	for (auto &w : g.weights) {
		w /= n;
	}
	g.bias /= n;
	return g;
}

Model train_logreg(const FeatureMatrix &x, const LabelVector &y, const ModelConfig &config) {
	check_shapes(x, y.size(), x.n_cols);
	LogisticModel m;
	m.weights.assign(x.n_cols, 0.0);
	// An empty training set leaves the zero initialization in place.
	if (x.n_rows > 0) {
		for (std::uint64_t epoch = 0; epoch < config.epochs; epoch++) {
			auto g = logreg_gradient(x, y.values, m.weights, m.bias);
			for (std::size_t c = 0; c < x.n_cols; c++) {
				m.weights[c] -= config.lr * g.weights[c];
			}
			m.bias -= config.lr * g.bias;
		}
	}
	return Model {config, x.n_cols, std::move(m)};
}

Model train_majority(const FeatureMatrix &x, const LabelVector &y, const ModelConfig &config) {
	check_shapes(x, y.size(), x.n_cols);
	double positives = 0.0;
	for (double v : y.values) {
		positives += v;
	}
	double rate = y.size() == 0 ? 0.0 : positives / static_cast<double>(y.size());
	return Model {config, x.n_cols, MajorityModel {rate}};
}

Model train_stump(const FeatureMatrix &x, const LabelVector &y, const ModelConfig &config) {
	check_shapes(x, y.size(), x.n_cols);
	if (x.n_cols == 0) {
		throw DimensionMismatch("decision stump needs at least one feature column");
	}
	StumpModel best;
	std::size_t best_correct = 0;
	bool have_best = false;
	for (std::size_t c = 0; c < x.n_cols; c++) {
		std::vector<double> values;
		values.reserve(x.n_rows);
		for (std::size_t r = 0; r < x.n_rows; r++) {
			values.push_back(x.at(r, c));
		}
		std::sort(values.begin(), values.end());
		values.erase(std::unique(values.begin(), values.end()), values.end());
		std::vector<double> thresholds;
		if (values.empty()) {
			thresholds.push_back(0.0);
		} else {
			thresholds.push_back(values.front() - 1.0);
			for (std::size_t i = 0; i + 1 < values.size(); i++) {
				thresholds.push_back(values[i] + (values[i + 1] - values[i]) / 2.0);
			}
		}
		for (double t : thresholds) {
			for (bool above : {true, false}) {
				std::size_t correct = 0;
				for (std::size_t r = 0; r < x.n_rows; r++) {
					bool positive = above ? x.at(r, c) > t : x.at(r, c) <= t;
					correct += (positive ? 1.0 : 0.0) == y.values[r] ? 1 : 0;
				}
				if (!have_best || correct > best_correct) {
					best = StumpModel {c, t, above};
					best_correct = correct;
					have_best = true;
				}
			}
		}
	}
	return Model {config, x.n_cols, best};
}

Model train_model(const FeatureMatrix &x, const LabelVector &y, const ModelConfig &config) {
	switch (config.kind) {
	case ModelKind::LogisticRegression:
		return train_logreg(x, y, config);
	case ModelKind::Majority:
		return train_majority(x, y, config);
	case ModelKind::DecisionStump:
		return train_stump(x, y, config);
	}
	throw Error("unknown model kind");
}

std::vector<double> predict(const Model &model, const FeatureMatrix &x) {
	if (x.n_cols != model.n_features) {
		throw DimensionMismatch("model was trained on " + std::to_string(model.n_features) +
		                        " feature columns but input has " + std::to_string(x.n_cols));
	}
	std::vector<double> out(x.n_rows);
	std::visit(
	    [&](const auto &m) {
		    using T = std::decay_t<decltype(m)>;
		    for (std::size_t r = 0; r < x.n_rows; r++) {
			    if constexpr (std::is_same_v<T, LogisticModel>) {
				    out[r] = sigmoid(logit(x.row(r), m.weights, m.bias));
			    } else if constexpr (std::is_same_v<T, MajorityModel>) {
				    out[r] = m.positive_rate;
			    } else {
				    double v = x.at(r, m.feature);
				    bool positive = m.positive_above ? v > m.threshold : v <= m.threshold;
				    out[r] = positive ? 1.0 : 0.0;
			    }
		    }
	    },
	    model.fitted);
	return out;
}

nlohmann::json to_json(const ModelConfig &config) {
	nlohmann::json j;
	j["kind"] = std::string(to_string(config.kind));
	if (config.kind == ModelKind::LogisticRegression) {
		j["lr"] = config.lr;
		j["epochs"] = config.epochs;
		j["seed"] = config.seed;
	}
	return j;
}

nlohmann::json to_json(const Model &model) {
	nlohmann::json j;
	j["kind"] = std::string(to_string(model.config.kind));
	j["config"] = to_json(model.config);
	std::visit(
	    [&](const auto &m) {
		    using T = std::decay_t<decltype(m)>;
		    if constexpr (std::is_same_v<T, LogisticModel>) {
			    j["weights"] = m.weights;
			    j["bias"] = m.bias;
		    } else if constexpr (std::is_same_v<T, MajorityModel>) {
			    j["weights"] = nlohmann::json::array();
			    j["bias"] = m.positive_rate;
		    } else {
			    j["weights"] = nlohmann::json::array();
			    j["bias"] = 0.0;
			    j["feature"] = m.feature;
			    j["threshold"] = m.threshold;
			    j["polarity"] = m.positive_above ? "+" : "-";
		    }
	    },
	    model.fitted);
	return j;
}

} // namespace pipelens
