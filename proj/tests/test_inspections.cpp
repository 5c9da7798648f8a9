#include "pipelens/csv.hpp"
#include "pipelens/errors.hpp"
#include "pipelens/executor.hpp"
#include "pipelens/inspection.hpp"
#include "pipelens/metrics.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace pipelens;
using testing_support::fixtures;
using testing_support::load_plan;

namespace {

ExecuteOptions with(std::vector<Inspection *> insp) {
	ExecuteOptions o;
	o.data_root = fixtures();
	o.inspections = std::move(insp);
	return o;
}

Relation annotated(const std::string &source, Schema schema, std::vector<Row> rows, Inspection &insp) {
	Relation r;
	r.schema = std::move(schema);
	r.rows = std::move(rows);
	for (std::size_t i = 0; i < r.rows.size(); i++) {
		r.row_ids.push_back({source, i});
	}
	r.annotations = AnnotationTable(r.rows.size(), 1);
	for (std::size_t i = 0; i < r.size(); i++) {
		r.annotations.at(i, 0) = insp.annotate_source(r, i);
	}
	return r;
}

NodeHistograms hist(const std::string &node, GroupHistogram in, GroupHistogram out) {
	return {node, OpKind::Selection, std::move(in), std::move(out)};
}

const DistributionFinding *find(const std::vector<DistributionFinding> &fs, const std::string &node,
                                const Value &group) {
	for (const auto &f : fs) {
		if (f.node == node && f.group == group) {
			return &f;
		}
	}
	return nullptr;
}

} // namespace

TEST(Lineage, SelectionCopiesAnnotation) {
	LineageInspection lineage;
	auto in = annotated("d", Schema({{"a", ValueType::Int}}), {{0}, {1}, {2}, {5}, {0}}, lineage);
	Datum d = in;
	PlanNode sel {"sel", OpKind::Selection, SelectionParams {parse_predicate("a == 5")}, {{"d"}}};
	auto out = eval_operator(sel, {&d}, with({&lineage}));
	const auto &rel = std::get<Relation>(out[0].second);
	ASSERT_EQ(rel.size(), 1u);
	EXPECT_EQ(std::get<LineageSet>(rel.annotations.at(0, 0)), LineageSet(RowId {"d", 3}));
}

TEST(Lineage, JoinUnionsBothSides) {
	LineageInspection lineage;
	auto left = annotated("p", Schema({{"k", ValueType::Int}}), {{9}, {4}}, lineage);
	std::vector<Row> right_rows(8, Row {Value(0)});
	right_rows[7] = {Value(4)};
	auto right = annotated("h", Schema({{"k", ValueType::Int}}), right_rows, lineage);
	Datum l = left, r = right;
	PlanNode join {"j", OpKind::Join, JoinParams {"k"}, {{"p"}, {"h"}}};
	auto rel = std::get<Relation>(eval_operator(join, {&l, &r}, with({&lineage}))[0].second);
	ASSERT_EQ(rel.size(), 1u);
	LineageSet expected;
	expected.insert({"p", 1});
	expected.insert({"h", 7});
	EXPECT_EQ(std::get<LineageSet>(rel.annotations.at(0, 0)), expected);
}

TEST(Lineage, FilterThenSelfJoinMatchesNestedLoop) {
	LineageInspection lineage;
	auto plan = load_plan("selfjoin.json");
	execute(plan, with({&lineage}));

	auto items = read_csv(fixtures() / "data/items.csv", "items");
	auto pred = parse_predicate("key != 2 or x > 0.0");
	std::vector<std::size_t> kept;
	for (std::size_t i = 0; i < items.size(); i++) {
		if (pred.evaluate(items.schema, items.rows[i])) {
			kept.push_back(i);
		}
	}
	ASSERT_EQ(kept.size(), 2u);
	std::vector<LineageSet> expected;
	for (auto i : kept) {
		for (auto j : kept) {
			if (items.rows[i][0] == items.rows[j][0]) {
				LineageSet s;
				s.insert({"items", i});
				s.insert({"items", j});
				expected.push_back(s);
			}
		}
	}
	EXPECT_EQ(lineage.lineage("paired"), expected);
	EXPECT_EQ(lineage.lineage("positive_keys").size(), 2u);

	auto j = lineage.result();
	EXPECT_EQ(j["paired"]["0"], nlohmann::json::parse(R"([["items", 0]])"));
}

TEST(Lineage, FitSummaryCoversTrainingRows) {
	LineageInspection lineage;
	auto plan = load_plan("people.json");
	execute(plan, with({&lineage}));
	const auto *summary = lineage.summary("__fit_age");
	ASSERT_NE(summary, nullptr);
	const auto &set = std::get<LineageSet>(*summary);
	EXPECT_EQ(set, [&] {
		LineageSet s;
		for (const auto &row : lineage.lineage("__split#train")) {
			s.merge(row);
		}
		return s;
	}());
	EXPECT_EQ(set.size(), 3u);
	ASSERT_NE(lineage.summary("__train"), nullptr);
}

TEST(Lineage, LargeAggregatesBecomeDigests) {
	LineageInspection lineage;
	std::vector<Annotation> rows;
	for (std::uint64_t i = 0; i <= kLineageDigestThreshold; i++) {
		rows.emplace_back(LineageSet(RowId {"big", i}));
	}
	std::vector<const Annotation *> ptrs;
	for (const auto &a : rows) {
		ptrs.push_back(&a);
	}
	auto s = lineage.summarize(OpKind::EstimatorFit, ptrs);
	const auto &digest = std::get<LineageDigest>(s);
	EXPECT_EQ(digest.count, kLineageDigestThreshold + 1);
	EXPECT_TRUE(digest.maybe_contains({"big", 17}));

	ptrs.resize(10);
	EXPECT_EQ(std::get<LineageSet>(lineage.summarize(OpKind::EstimatorFit, ptrs)).size(), 10u);
}

TEST(Findings, UnchangedProportionsNotFlagged) {
	auto fs = check_distributions({hist("f", {{"a", 4}, {"b", 6}}, {{"a", 2}, {"b", 3}})});
	ASSERT_EQ(fs.size(), 2u);
	for (const auto &f : fs) {
		EXPECT_FALSE(f.flagged);
		EXPECT_DOUBLE_EQ(f.ratio, 1.0);
	}
}

TEST(Findings, HalfToFifthIsFlagged) {
	// 10 rows, 5 per group; the operator drops 3 of A's rows and keeps B
	auto fs = check_distributions({hist("j", {{"A", 5}, {"B", 5}}, {{"A", 2}, {"B", 5}})});
	const auto *a = find(fs, "j", "A");
	ASSERT_NE(a, nullptr);
	EXPECT_DOUBLE_EQ(a->proportion_before, 0.5);
	EXPECT_NEAR(a->proportion_after, 2.0 / 7.0, 1e-15);

	fs = check_distributions({hist("j", {{"A", 5}, {"B", 5}}, {{"A", 1}, {"B", 4}})});
	a = find(fs, "j", "A");
	ASSERT_NE(a, nullptr);
	EXPECT_NEAR(a->ratio, 0.4, 1e-12);
	EXPECT_TRUE(a->flagged);
}

TEST(Findings, DegenerateCasesSkipped) {
	auto fs = check_distributions({hist("f", {{"a", 0}, {"b", 3}}, {{"a", 0}, {"b", 3}}), hist("g", {}, {})});
	EXPECT_EQ(fs.size(), 1u);
	EXPECT_EQ(find(fs, "f", "a"), nullptr);
	EXPECT_EQ(find(fs, "g", "b"), nullptr);
}

TEST(Findings, TauBand) {
	auto fs = check_distributions({hist("f", {{"a", 50}, {"b", 50}}, {{"a", 41}, {"b", 59}})}, 0.8);
	EXPECT_FALSE(find(fs, "f", "a")->flagged);
	EXPECT_FALSE(find(fs, "f", "b")->flagged);
	fs = check_distributions({hist("f", {{"a", 50}, {"b", 50}}, {{"a", 41}, {"b", 59}})}, 0.9);
	EXPECT_TRUE(find(fs, "f", "a")->flagged);
	EXPECT_TRUE(find(fs, "f", "b")->flagged);
}

TEST(Findings, NonRelationalNodesIgnored) {
	NodeHistograms h {"__tf_x_train", OpKind::Transform, {{"a", 5}, {"b", 5}}, {{"a", 1}, {"b", 9}}};
	EXPECT_TRUE(check_distributions({h}).empty());
}

TEST(Findings, JsonShape) {
	auto fs = check_distributions({hist("j", {{"A", 5}, {"B", 5}}, {{"A", 1}, {"B", 4}})});
	auto j = to_json(fs);
	ASSERT_TRUE(j.is_array());
	EXPECT_EQ(j[0]["node"], "j");
	EXPECT_EQ(j[0]["group"], "A");
	EXPECT_TRUE(j[0]["flagged"].get<bool>());
}

TEST(Histograms, InvariantUnderRowPermutation) {
	std::vector<Row> rows;
	for (int i = 0; i < 30; i++) {
		rows.push_back({Value(i % 3 == 0 ? "x" : "y"), Value(i)});
	}
	PlanNode sel {"sel", OpKind::Selection, SelectionParams {parse_predicate("v > 11")}, {{"d"}}};
	Schema schema({{"g", ValueType::Text}, {"v", ValueType::Int}});
	std::vector<std::string> dumps;
	std::mt19937 rng(5);
	for (int trial = 0; trial < 5; trial++) {
		HistogramInspection h("g");
		auto in = annotated("d", schema, rows, h);
		Datum din = in;
		auto out = eval_operator(sel, {&din}, with({&h}));
		h.observe(Observation {sel, 0, {&din}, out[0].second});
		dumps.push_back(to_json(check_distributions(h.histograms())).dump());
		std::shuffle(rows.begin(), rows.end(), rng);
	}
	for (const auto &d : dumps) {
		EXPECT_EQ(d, dumps[0]);
	}
}

TEST(Histograms, ConservationAcrossFixtures) {
	for (const char *name : {"healthcare.json", "people_concat.json", "fairness.json", "skew.json"}) {
		auto plan = load_plan(name);
		auto doc = testing_support::load_doc(name);
		std::string column = doc.sensitive ? doc.sensitive->column : "smoker";
		HistogramInspection h(column);
		auto result = execute(plan, with({&h}));
		std::map<std::string, std::size_t> rows;
		for (const auto &n : result.trace.nodes) {
			rows[n.node] = n.rows;
		}
		for (const auto &nh : h.histograms()) {
			std::size_t in = 0, out = 0;
			for (const auto &[g, c] : nh.input) {
				in += c;
			}
			for (const auto &[g, c] : nh.output) {
				out += c;
			}
			EXPECT_EQ(out, rows.at(nh.node)) << name << " " << nh.node;
			if (nh.kind == OpKind::Selection) {
				EXPECT_LE(out, in) << name << " " << nh.node;
				for (const auto &[g, c] : nh.output) {
					EXPECT_LE(c, nh.input.count(g) ? nh.input.at(g) : 0) << name << " " << nh.node;
				}
			}
			if (nh.kind == OpKind::Projection) {
				EXPECT_EQ(nh.output, nh.input) << name << " " << nh.node;
			}
		}
	}
}

TEST(Histograms, CleanFixtureHasNoFlags) {
	HistogramInspection h("race");
	execute(load_plan("healthcare.json"), with({&h}));
	auto fs = check_distributions(h.histograms());
	EXPECT_FALSE(fs.empty());
	for (const auto &f : fs) {
		EXPECT_FALSE(f.flagged) << f.node;
	}
}

TEST(Slices, SingleGroupEqualsOverall) {
	Predictions p;
	p.probabilities = {0.9, 0.2, 0.7};
	p.row_ids = {{"t", 0}, {"t", 1}, {"t", 2}};
	LabelVector y;
	y.values = {1, 1, 0};
	y.row_ids = p.row_ids;
	Relation test;
	test.schema = Schema({{"g", ValueType::Text}});
	test.rows = {{Value("a")}, {Value("a")}, {Value("a")}};
	test.row_ids = p.row_ids;
	auto report = slice_scores(p, y, test, "g");
	ASSERT_EQ(report.groups.size(), 1u);
	EXPECT_DOUBLE_EQ(report.groups.at("a").accuracy, report.overall);
	EXPECT_DOUBLE_EQ(report.overall, accuracy(p.probabilities, y.values));
}

TEST(Slices, PerfectAndWrongGroups) {
	Predictions p;
	p.probabilities = {0.9, 0.1, 0.9, 0.1};
	p.row_ids = {{"t", 0}, {"t", 1}, {"t", 2}, {"t", 3}};
	LabelVector y;
	y.values = {1, 0, 0, 1};
	y.row_ids = p.row_ids;
	Relation test;
	test.schema = Schema({{"g", ValueType::Text}});
	test.rows = {{Value("A")}, {Value("A")}, {Value("B")}, {Value("B")}};
	test.row_ids = p.row_ids;
	auto report = slice_scores(p, y, test, "g");
	EXPECT_EQ(report.groups.at("A").accuracy, 1.0);
	EXPECT_EQ(report.groups.at("B").accuracy, 0.0);
	EXPECT_EQ(report.overall, 0.5);

	test.row_ids[3] = {"t", 99};
	EXPECT_THROW(slice_scores(p, y, test, "g"), AlignmentError);
}

TEST(Slices, FixtureMatchesHandFilteredRecomputation) {
	auto plan = load_plan("healthcare.json");
	ExecuteOptions o = with({});
	o.retain = {{"__split", Port::Test}, {"__predict"}, {"__label_test"}};
	auto result = execute(plan, o);
	const auto &test = std::get<Relation>(result.retained.at("__split#test"));
	const auto &preds = std::get<Predictions>(result.retained.at("__predict"));
	const auto &labels = std::get<LabelVector>(result.retained.at("__label_test"));
	auto report = slice_scores(preds, labels, test, "race");

	auto race = *test.schema.index_of("race");
	std::map<std::string, std::pair<int, int>> tally;
	for (std::size_t i = 0; i < preds.size(); i++) {
		std::size_t row = 0;
		while (test.row_ids[row] != preds.row_ids[i]) {
			row++;
		}
		auto &t = tally[test.rows[row][race].as_text()];
		t.second++;
		t.first += ((preds.probabilities[i] >= 0.5) == (labels.values[i] == 1.0)) ? 1 : 0;
	}
	ASSERT_EQ(report.groups.size(), tally.size());
	double weighted = 0;
	for (const auto &[g, t] : tally) {
		const auto &s = report.groups.at(Value(g));
		EXPECT_EQ(s.rows, static_cast<std::size_t>(t.second));
		EXPECT_DOUBLE_EQ(s.accuracy, static_cast<double>(t.first) / t.second);
		weighted += s.accuracy * s.rows;
	}
	EXPECT_NEAR(report.overall, weighted / static_cast<double>(preds.size()), 1e-12);
	EXPECT_DOUBLE_EQ(report.overall, result.score.at("accuracy"));
}

TEST(Instrumentation, SlotWidthEqualsInspectionCount) {
	for (std::size_t k = 0; k <= 3; k++) {
		LineageInspection a;
		HistogramInspection b("race"), c("county");
		std::vector<Inspection *> all {&a, &b, &c};
		all.resize(k);
		auto o = with(all);
		o.retain = {{"adults"}, {"__tf_age_test"}, {"__predict"}};
		auto result = execute(load_plan("healthcare.json"), o);
		const auto &rel = std::get<Relation>(result.retained.at("adults"));
		EXPECT_EQ(rel.annotations.width(), k);
		EXPECT_EQ(rel.annotations.slot_count(), rel.size() * k);
		EXPECT_EQ(std::get<FeatureMatrix>(result.retained.at("__tf_age_test")).annotations.width(), k);
		EXPECT_EQ(std::get<Predictions>(result.retained.at("__predict")).annotations.width(), k);
	}
}
