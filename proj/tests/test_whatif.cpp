#include "pipelens/corruption.hpp"
#include "pipelens/csv.hpp"
#include "pipelens/errors.hpp"
#include "pipelens/executor.hpp"
#include "pipelens/whatif.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

using namespace pipelens;
using testing_support::fixtures;
using testing_support::load_plan;

namespace {

AnalysisOptions opts(bool mqo = true) {
	AnalysisOptions o;
	o.data_root = fixtures();
	o.use_mqo = mqo;
	return o;
}

std::size_t count_kind(const Plan &plan, OpKind kind) {
	std::size_t n = 0;
	for (const auto &[id, node] : plan.nodes()) {
		n += node.kind == kind ? 1 : 0;
	}
	return n;
}

// Rank rows by (bucket, hash, position) of FNV-1a(seed || source || index)
// and keep the lowest round(fraction * n).
std::vector<std::size_t> oracle_targets(const Relation &rel, double fraction, std::uint64_t seed) {
	struct Ranked {
		double bucket;
		std::uint64_t hash;
		std::size_t pos;
	};
	std::vector<Ranked> ranked;
	for (std::size_t i = 0; i < rel.size(); i++) {
		std::uint64_t h = 14695981039346656037ULL;
		auto feed = [&](std::uint8_t b) {
			h ^= b;
			h *= 1099511628211ULL;
		};
		for (int k = 0; k < 8; k++) {
			feed(static_cast<std::uint8_t>(seed >> (8 * k)));
		}
		for (unsigned char c : rel.row_ids[i].source) {
			feed(c);
		}
		for (int k = 0; k < 8; k++) {
			feed(static_cast<std::uint8_t>(rel.row_ids[i].index >> (8 * k)));
		}
		ranked.push_back({static_cast<double>(h % 1000000) / 1e6, h, i});
	}
	std::sort(ranked.begin(), ranked.end(), [](const Ranked &a, const Ranked &b) {
		return std::tie(a.bucket, a.hash, a.pos) < std::tie(b.bucket, b.hash, b.pos);
	});
	auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(rel.size())));
	std::vector<std::size_t> out;
	for (std::size_t i = 0; i < k; i++) {
		out.push_back(ranked[i].pos);
	}
	std::sort(out.begin(), out.end());
	return out;
}

Relation people() {
	return read_csv(fixtures() / "data/people.csv", "people");
}

} // namespace

TEST(Corrupt, FractionZeroIsIdentity) {
	auto rel = people();
	for (auto kind : {CorruptionKind::MissingValues, CorruptionKind::Outliers}) {
		auto out = corrupt(rel, "age", kind, 0.0, 10.0, 7);
		EXPECT_EQ(out.rows, rel.rows);
		EXPECT_EQ(out.row_ids, rel.row_ids);
	}
}

TEST(Corrupt, FractionOneMissingNullsEverything) {
	auto out = corrupt(people(), "smoker", CorruptionKind::MissingValues, 1.0, 1.0, 3);
	for (const auto &row : out.rows) {
		EXPECT_TRUE(row[2].is_null());
	}
}

TEST(Corrupt, HalfWithSeedSevenMatchesHashOracle) {
	auto rel = people();
	auto expected = oracle_targets(rel, 0.5, 7);
	ASSERT_EQ(expected.size(), 5u);
	EXPECT_EQ(corruption_targets(rel.row_ids, 0.5, 7), expected);
	auto out = corrupt(rel, "age", CorruptionKind::MissingValues, 0.5, 1.0, 7);
	std::vector<std::size_t> changed;
	for (std::size_t i = 0; i < rel.size(); i++) {
		if (out.rows[i] != rel.rows[i]) {
			changed.push_back(i);
			EXPECT_TRUE(out.rows[i][1].is_null());
		}
	}
	EXPECT_EQ(changed, expected);
}

TEST(Corrupt, OutliersScaleAndKeepType) {
	auto rel = people();
	auto out = corrupt(rel, "age", CorruptionKind::Outliers, 0.3, 10.0, 1);
	auto targets = oracle_targets(rel, 0.3, 1);
	for (auto i : targets) {
		EXPECT_EQ(out.rows[i][1], Value(rel.rows[i][1].as_int() * 10));
	}
	EXPECT_NO_THROW(out.check_invariants());
}

TEST(Corrupt, CategorySwapPicksDifferentKnownValue) {
	auto rel = people();
	auto out = corrupt(rel, "outcome", CorruptionKind::CategorySwap, 0.6, 1.0, 5);
	std::size_t changed = 0;
	for (std::size_t i = 0; i < rel.size(); i++) {
		if (out.rows[i][3] != rel.rows[i][3]) {
			changed++;
			auto v = out.rows[i][3].as_text();
			EXPECT_TRUE(v == "sick" || v == "healthy");
		}
	}
	EXPECT_EQ(changed, 6u);
}

TEST(Corrupt, TypeErrors) {
	EXPECT_THROW(corrupt(people(), "smoker", CorruptionKind::Outliers, 0.5, 2.0, 1), TypeMismatch);
	EXPECT_THROW(corrupt(people(), "age", CorruptionKind::CategorySwap, 0.5, 1.0, 1), TypeMismatch);
	EXPECT_THROW(corrupt(people(), "nope", CorruptionKind::MissingValues, 0.5, 1.0, 1), UnknownColumn);
}

TEST(ApplyPatch, RemoveSelectionSplices) {
	auto plan = load_plan("healthcare.json");
	auto patched = apply_patch(plan, OperatorPatch {"adults", OperatorPatch::Action::Remove});
	EXPECT_EQ(patched.size(), plan.size() - 1);
	EXPECT_FALSE(patched.contains("adults"));
	EXPECT_EQ(patched.node("__split").inputs, (std::vector<Edge> {{"joined"}}));
	EXPECT_EQ(infer_schema(patched, "__split"), infer_schema(plan, "__split"));
	// nodes off the patched path are untouched
	for (const char *id : {"patients", "histories", "joined", "__fit_age", "__train", "__score"}) {
		EXPECT_EQ(patched.node(id), plan.node(id)) << id;
	}
}

TEST(ApplyPatch, FeatureDropReducesConcat) {
	auto plan = load_plan("healthcare.json");
	ASSERT_EQ(count_kind(plan, OpKind::EstimatorFit), 2u);
	ASSERT_EQ(plan.node("__concat_train").inputs.size(), 2u);
	auto patched = apply_patch(plan, FeatureDrop {"age"});
	EXPECT_EQ(count_kind(patched, OpKind::EstimatorFit), 1u);
	EXPECT_EQ(count_kind(patched, OpKind::Transform), 2u);
	EXPECT_EQ(patched.node("__concat_train").inputs.size(), 1u);
	EXPECT_EQ(patched.node("__concat_test").inputs.size(), 1u);
	EXPECT_TRUE(validate(patched).empty());
}

TEST(ApplyPatch, DroppingOnlyFeatureIsInvalid) {
	auto plan = load_plan("healthcare1.json");
	EXPECT_THROW(apply_patch(plan, FeatureDrop {"county"}), InvalidAfterPatch);
}

TEST(ApplyPatch, UnknownTargets) {
	auto plan = load_plan("healthcare.json");
	EXPECT_THROW(apply_patch(plan, OperatorPatch {"nope", OperatorPatch::Action::Remove}), UnknownTarget);
	EXPECT_THROW(apply_patch(plan, FeatureDrop {"nope"}), UnknownTarget);
	EXPECT_THROW(apply_patch(plan, DataCorruption {"nope", "age"}), UnknownTarget);
	EXPECT_THROW(apply_patch(plan, DataCorruption {"patients", "nope"}), Error);
	DataCorruption bad {"patients", "age"};
	bad.fraction = 1.5;
	EXPECT_THROW(apply_patch(plan, bad), Error);
	EXPECT_THROW(apply_patch(plan, OperatorPatch {"__split", OperatorPatch::Action::Remove}), Error);
}

TEST(ApplyPatch, ReplacePredicateAndEncoder) {
	auto plan = load_plan("healthcare.json");
	OperatorPatch pred {"adults", OperatorPatch::Action::ReplacePredicate, parse_predicate("age >= 30")};
	auto p1 = apply_patch(plan, pred);
	EXPECT_EQ(p1.node("adults").get<SelectionParams>().predicate.to_string(), "age >= 30");
	EXPECT_EQ(p1.size(), plan.size());

	OperatorPatch enc {"__fit_age", OperatorPatch::Action::ReplaceEncoder, std::nullopt, Encoder::OneHot};
	auto p2 = apply_patch(plan, enc);
	for (const char *id : {"__fit_age", "__tf_age_train", "__tf_age_test"}) {
		EXPECT_EQ(p2.node(id).get<EncoderParams>().encoder, Encoder::OneHot) << id;
	}
	EXPECT_EQ(p2.node("__fit_county"), plan.node("__fit_county"));
}

TEST(ApplyPatch, ModelPatchRewritesTrainer) {
	auto plan = load_plan("healthcare.json");
	auto patched = apply_patch(plan, ModelPatch {{ModelKind::Majority}});
	EXPECT_EQ(patched.node("__train").get<ModelConfig>().kind, ModelKind::Majority);
	EXPECT_EQ(patched.node("__predict"), plan.node("__predict"));
}

TEST(ApplyPatch, CorruptionPlacement) {
	auto plan = load_plan("healthcare.json");
	DataCorruption test_side {"patients", "age", CorruptionKind::MissingValues, 0.5};
	auto p1 = apply_patch(plan, test_side);
	ASSERT_EQ(count_kind(p1, OpKind::Corruption), 1u);
	std::string id;
	for (const auto &[nid, n] : p1.nodes()) {
		if (n.kind == OpKind::Corruption) {
			id = nid;
			EXPECT_EQ(n.inputs, (std::vector<Edge> {{"__split", Port::Test}}));
		}
	}
	for (const char *c : {"__tf_age_test", "__tf_county_test", "__label_test"}) {
		EXPECT_EQ(p1.node(c).inputs.back(), Edge {id}) << c;
	}
	EXPECT_EQ(p1.node("__fit_age"), plan.node("__fit_age"));

	test_side.branch = Branch::Both;
	auto p2 = apply_patch(plan, test_side);
	for (const auto &[nid, n] : p2.nodes()) {
		if (n.kind == OpKind::Corruption) {
			EXPECT_EQ(n.inputs, (std::vector<Edge> {{"patients"}}));
			EXPECT_EQ(p2.node("joined").inputs[0], Edge {nid});
		}
	}
}

TEST(ApplyPatch, ConflictsRejected) {
	auto plan = load_plan("healthcare.json");
	std::vector<Patch> patches {
	    OperatorPatch {"adults", OperatorPatch::Action::ReplacePredicate, parse_predicate("age > 1")},
	    OperatorPatch {"adults", OperatorPatch::Action::Remove},
	};
	EXPECT_THROW(apply_patches(plan, patches), ConflictingPatches);
	std::vector<Patch> ok {FeatureDrop {"age"}, OperatorPatch {"adults", OperatorPatch::Action::Remove}};
	EXPECT_EQ(apply_patches(plan, ok).size(), plan.size() - 4);
}

TEST(Robustness, FractionZeroEqualsBaseline) {
	auto plan = load_plan("healthcare.json");
	RobustnessGrid grid {"patients", "age", {CorruptionKind::MissingValues, CorruptionKind::Outliers}, {0.0}, 7};
	auto report = analyze_robustness(plan, grid, opts());
	ASSERT_EQ(report.variants.size(), 2u);
	for (const auto &v : report.variants) {
		ASSERT_TRUE(v.score.has_value());
		EXPECT_EQ(*v.score, report.baseline) << v.label;
		for (const auto &[m, d] : v.delta) {
			EXPECT_EQ(d, 0.0);
		}
	}
}

TEST(Robustness, GridCardinalityAndOrder) {
	auto plan = load_plan("healthcare.json");
	RobustnessGrid grid {"patients", "age", {CorruptionKind::Outliers, CorruptionKind::MissingValues}, {1.0, 0.0, 0.5},
	                     7};
	auto report = analyze_robustness(plan, grid, opts());
	std::vector<std::string> labels;
	for (const auto &v : report.variants) {
		labels.push_back(v.label);
	}
	EXPECT_EQ(labels, (std::vector<std::string> {"missing_values@0", "missing_values@0.5", "missing_values@1",
	                                             "outliers@0", "outliers@0.5", "outliers@1"}));
	EXPECT_FALSE(report.failed());
}

TEST(Robustness, AllMissingOnOnlyFeatureIsConstantPrediction) {
	auto plan = load_plan("healthcare1.json");
	RobustnessGrid grid {"patients", "county", {CorruptionKind::MissingValues}, {1.0}, 7};
	auto report = analyze_robustness(plan, grid, opts());
	ASSERT_EQ(report.variants.size(), 1u);
	ASSERT_TRUE(report.variants[0].score.has_value());

	// with every test row encoded as zeros the model outputs sigmoid(bias)
	ExecuteOptions o;
	o.data_root = fixtures();
	o.retain = {{"__train"}, {"__label_test"}};
	auto base = execute(plan, o);
	double bias = std::get<LogisticModel>(std::get<TrainedModel>(base.retained.at("__train")).model.fitted).bias;
	double cls = 1.0 / (1.0 + std::exp(-bias)) >= 0.5 ? 1.0 : 0.0;
	const auto &y = std::get<LabelVector>(base.retained.at("__label_test")).values;
	double hits = static_cast<double>(std::count(y.begin(), y.end(), cls));
	EXPECT_EQ(report.variants[0].score->at("accuracy"), hits / static_cast<double>(y.size()));
}

TEST(FeatureImportance, DuplicateFeatureNearZero) {
	auto report = analyze_feature_importance(load_plan("duplicate.json"), opts());
	for (const auto &v : report.variants) {
		if (v.label == "drop:age" || v.label == "drop:age#2") {
			ASSERT_TRUE(v.importance.has_value());
			EXPECT_LE(std::abs(*v.importance), 1e-9) << v.label;
		}
	}
	EXPECT_EQ(report.variants.size(), 3u);
}

TEST(FeatureImportance, SingleFeatureGivesWarningOnly) {
	auto report = analyze_feature_importance(load_plan("healthcare1.json"), opts());
	EXPECT_TRUE(report.variants.empty());
	ASSERT_EQ(report.warnings.size(), 1u);
	EXPECT_NE(report.warnings[0].find("county"), std::string::npos);
}

TEST(FeatureImportance, LeakingFeatureRanksFirst) {
	auto report = analyze_feature_importance(load_plan("leak.json"), opts());
	ASSERT_EQ(report.variants.size(), 2u);
	EXPECT_EQ(report.variants[0].label, "drop:complications");
	EXPECT_GT(*report.variants[0].importance, *report.variants[1].importance);
	for (const auto &v : report.variants) {
		EXPECT_EQ(*v.importance, report.baseline.at("accuracy") - v.score->at("accuracy"));
	}
}

TEST(FeatureImportance, SortedDescendingThenByName) {
	auto report = analyze_feature_importance(load_plan("healthcare4.json"), opts());
	ASSERT_EQ(report.variants.size(), 4u);
	for (std::size_t i = 1; i < report.variants.size(); i++) {
		const auto &a = report.variants[i - 1];
		const auto &b = report.variants[i];
		EXPECT_TRUE(*a.importance > *b.importance || (*a.importance == *b.importance && a.label < b.label));
	}
	EXPECT_GT(report.reuse.shared_node_count, 0u);
}

TEST(OperatorFairness, NoOpFilterHasZeroDeltas) {
	auto report = analyze_operator_fairness(load_plan("fairness.json"), {"no_op_filter"}, opts());
	ASSERT_EQ(report.variants.size(), 1u);
	for (const auto &[m, d] : report.variants[0].delta) {
		EXPECT_EQ(d, 0.0) << m;
	}
	EXPECT_EQ(report.variants[0].delta.size(), 2u);
}

TEST(OperatorFairness, RemovingBiasedFilterMovesDpdTowardZero) {
	auto report = analyze_operator_fairness(load_plan("fairness.json"), {"verified_only"}, opts());
	ASSERT_EQ(report.variants.size(), 1u);
	double before = report.baseline.at("demographic_parity_difference");
	double after = report.variants[0].score->at("demographic_parity_difference");
	EXPECT_LT(std::abs(after), std::abs(before));
}

TEST(OperatorFairness, EmptyListIsBaselineOnly) {
	auto report = analyze_operator_fairness(load_plan("fairness.json"), {}, opts());
	EXPECT_TRUE(report.variants.empty());
	EXPECT_EQ(report.baseline.metrics.size(), 2u);
	EXPECT_THROW(analyze_operator_fairness(load_plan("fairness.json"), {"ghost"}, opts()), UnknownTarget);
}

TEST(Analyses, MqoMatchesNaive) {
	auto hc = load_plan("healthcare.json");
	RobustnessGrid grid {"patients", "age",
	                     {CorruptionKind::MissingValues, CorruptionKind::Outliers},
	                     {0.0, 0.25, 0.5, 1.0},
	                     11};
	auto fair = load_plan("fairness.json");
	std::vector<std::pair<AnalysisReport, AnalysisReport>> pairs {
	    {analyze_robustness(hc, grid, opts(true)), analyze_robustness(hc, grid, opts(false))},
	    {analyze_feature_importance(load_plan("healthcare4.json"), opts(true)),
	     analyze_feature_importance(load_plan("healthcare4.json"), opts(false))},
	    {analyze_operator_fairness(fair, {"verified_only", "no_op_filter"}, opts(true)),
	     analyze_operator_fairness(fair, {"verified_only", "no_op_filter"}, opts(false))},
	};
	for (const auto &[merged, naive] : pairs) {
		EXPECT_EQ(merged.baseline, naive.baseline);
		ASSERT_EQ(merged.variants.size(), naive.variants.size());
		for (std::size_t i = 0; i < merged.variants.size(); i++) {
			EXPECT_EQ(merged.variants[i].label, naive.variants[i].label);
			EXPECT_EQ(merged.variants[i].score, naive.variants[i].score) << merged.variants[i].label;
		}
		EXPECT_EQ(naive.reuse.shared_node_count, 0u);
		EXPECT_LT(merged.reuse.merged_operator_count, naive.reuse.merged_operator_count);
	}
}

TEST(Analyses, ConfigValidation) {
	auto plan = load_plan("healthcare.json");
	EXPECT_THROW(run_analysis(plan, {{"analysis", "sensitivity"}}, opts()), SemanticError);
	EXPECT_THROW(run_analysis(plan, {{"analysis", "feature_importance"}, {"extra", 1}}, opts()), SemanticError);
	EXPECT_THROW(run_analysis(plan, nlohmann::json::parse(R"({"analysis": "robustness", "dataset": "patients",
	  "column": "age", "kinds": ["nope"], "fractions": [0.5]})"),
	                          opts()),
	             SemanticError);
	auto report = run_analysis(plan, {{"analysis", "feature_importance"}}, opts());
	EXPECT_EQ(report.analysis, "feature_importance");
	auto j = to_json(report);
	EXPECT_TRUE(j.contains("baseline"));
	EXPECT_TRUE(j.contains("variants"));
	EXPECT_EQ(j["reuse_stats"].size(), 3u);
}

TEST(Analyses, VariantFailureIsTagged) {
	auto plan = load_plan("healthcare.json");
	// nulling every age upstream of the filter empties the test set, only for that variant
	RobustnessGrid grid {"patients", "age", {CorruptionKind::MissingValues}, {0.0, 1.0}, 1, Branch::Both};
	auto report = analyze_robustness(plan, grid, opts());
	ASSERT_EQ(report.variants.size(), 2u);
	EXPECT_TRUE(report.variants[0].score.has_value());
	EXPECT_FALSE(report.variants[1].score.has_value());
	EXPECT_NE(report.variants[1].error.find("missing_values@1"), std::string::npos);
	EXPECT_TRUE(report.failed());
}

TEST(Analyses, TypeInvalidCorruptionRejectedUpFront) {
	auto plan = load_plan("healthcare.json");
	RobustnessGrid grid {"patients", "county", {CorruptionKind::Outliers}, {0.5}, 1};
	EXPECT_THROW(analyze_robustness(plan, grid, opts()), InvalidAfterPatch);
}
