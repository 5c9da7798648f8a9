#pragma once

#include "pipelens/relation.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pipelens {

enum class ModelKind { LogisticRegression, Majority, DecisionStump };

std::string_view to_string(ModelKind kind);
std::optional<ModelKind> model_kind_from_string(std::string_view name);

struct ModelConfig {
	ModelKind kind = ModelKind::LogisticRegression;
	double lr = 0.1;
	std::uint64_t epochs = 100;
	//! Reserved; full-batch training consumes no randomness.
	std::uint64_t seed = 0;

	bool operator==(const ModelConfig &) const = default;
};

struct LogisticModel {
	std::vector<double> weights;
	double bias = 0.0;
};

struct MajorityModel {
	double positive_rate = 0.0;
};

//! Predicts positive when x[feature] > threshold (polarity +) or x[feature] <= threshold (polarity -).
struct StumpModel {
	std::size_t feature = 0;
	double threshold = 0.0;
	bool positive_above = true;
};

struct Model {
	ModelConfig config;
	std::size_t n_features = 0;
	std::variant<LogisticModel, MajorityModel, StumpModel> fitted;
};

double sigmoid(double z);

//! Mean log-loss of a logistic model.
double logreg_loss(const FeatureMatrix &x, std::span<const double> y, std::span<const double> weights, double bias);

struct LogregGradient {
	std::vector<double> weights;
	double bias = 0.0;
};

//! Analytic gradient of logreg_loss.
LogregGradient logreg_gradient(const FeatureMatrix &x, std::span<const double> y, std::span<const double> weights,
                               double bias);

//! Full-batch gradient descent from zero weights, `epochs` steps of size `lr`.
Model train_logreg(const FeatureMatrix &x, const LabelVector &y, const ModelConfig &config);
Model train_majority(const FeatureMatrix &x, const LabelVector &y, const ModelConfig &config);
Model train_stump(const FeatureMatrix &x, const LabelVector &y, const ModelConfig &config);

//! Dispatches on config.kind. Throws DimensionMismatch when x and y disagree in length.
Model train_model(const FeatureMatrix &x, const LabelVector &y, const ModelConfig &config);

//! Positive-class probability per row; class label is probability >= 0.5.
std::vector<double> predict(const Model &model, const FeatureMatrix &x);

nlohmann::json to_json(const ModelConfig &config);
nlohmann::json to_json(const Model &model);

} // namespace pipelens
