#include "pipelens/csv.hpp"
#include "pipelens/errors.hpp"
#include "pipelens/executor.hpp"
#include "pipelens/featurize.hpp"
#include "pipelens/hash.hpp"
#include "pipelens/inspection.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

using namespace pipelens;
using testing_support::fixtures;
using testing_support::load_plan;

namespace {

Relation make_relation(const std::string &source, Schema schema, std::vector<Row> rows, std::size_t width = 0) {
	Relation r;
	r.schema = std::move(schema);
	r.rows = std::move(rows);
	for (std::size_t i = 0; i < r.rows.size(); i++) {
		r.row_ids.push_back({source, i});
	}
	r.annotations = AnnotationTable(r.rows.size(), width);
	return r;
}

ExecuteOptions at_fixtures() {
	ExecuteOptions o;
	o.data_root = fixtures();
	return o;
}

// Straight-line re-implementation of people.json: read, filter, split,
// fit on train, encode, train by gradient descent, score.
std::uint64_t oracle_fnv(std::uint64_t seed, const std::string &source, std::uint64_t index) {
	std::uint64_t h = 14695981039346656037ULL;
	auto feed = [&](std::uint8_t b) {
		h ^= b;
		h *= 1099511628211ULL;
	};
	for (int i = 0; i < 8; i++) {
		feed(static_cast<std::uint8_t>(seed >> (8 * i)));
	}
	for (unsigned char c : source) {
		feed(c);
	}
	for (int i = 0; i < 8; i++) {
		feed(static_cast<std::uint8_t>(index >> (8 * i)));
	}
	return h;
}

struct PersonRow {
	std::uint64_t index;
	double age;
	std::string smoker;
	double label;
};

double straight_line_people_accuracy(std::size_t *train_rows, std::size_t *test_rows) {
	std::ifstream in(fixtures() / "data/people.csv");
	std::string line;
	std::getline(in, line);
	std::vector<PersonRow> train, test;
	std::uint64_t index = 0;
	while (std::getline(in, line)) {
		std::vector<std::string> f;
		std::size_t start = 0;
		for (std::size_t p; (p = line.find(',', start)) != std::string::npos; start = p + 1) {
			f.push_back(line.substr(start, p - start));
		}
		f.push_back(line.substr(start));
		PersonRow row {index, std::stod(f[1]), f[2], f[3] == "sick" ? 1.0 : 0.0};
		bool keep = row.age >= 18;
		bool is_test = static_cast<double>(oracle_fnv(42, "people", index) % 1000000) / 1e6 < 0.5;
		if (keep) {
			(is_test ? test : train).push_back(row);
		}
		index++;
	}
	*train_rows = train.size();
	*test_rows = test.size();

	double mean = 0;
	for (const auto &r : train) {
		mean += r.age;
	}
	mean /= static_cast<double>(train.size());
	double var = 0;
	for (const auto &r : train) {
		var += (r.age - mean) * (r.age - mean);
	}
	double sd = std::max(std::sqrt(var / static_cast<double>(train.size())), 1e-12);
	std::set<std::string> cats;
	for (const auto &r : train) {
		cats.insert(r.smoker);
	}
	std::vector<std::string> cat_list(cats.begin(), cats.end());

	auto encode = [&](const PersonRow &r) {
		std::vector<double> x {(r.age - mean) / sd};
		for (const auto &c : cat_list) {
			x.push_back(r.smoker == c ? 1.0 : 0.0);
		}
		return x;
	};
	std::size_t d = 1 + cat_list.size();
	std::vector<double> w(d, 0.0);
	double b = 0.0;
	for (int epoch = 0; epoch < 50; epoch++) {
		std::vector<double> gw(d, 0.0);
		double gb = 0.0;
		for (const auto &r : train) {
			auto x = encode(r);
			double z = b;
			for (std::size_t c = 0; c < d; c++) {
				z += x[c] * w[c];
			}
			double p = 1.0 / (1.0 + std::exp(-z));
			for (std::size_t c = 0; c < d; c++) {
				gw[c] += (p - r.label) * x[c];
			}
			gb += p - r.label;
		}
		for (std::size_t c = 0; c < d; c++) {
			w[c] -= 0.5 * gw[c] / static_cast<double>(train.size());
		}
		b -= 0.5 * gb / static_cast<double>(train.size());
	}
	std::size_t correct = 0;
	for (const auto &r : test) {
		auto x = encode(r);
		double z = b;
		for (std::size_t c = 0; c < d; c++) {
			z += x[c] * w[c];
		}
		double p = 1.0 / (1.0 + std::exp(-z));
		correct += ((p >= 0.5) == (r.label == 1.0)) ? 1 : 0;
	}
	return static_cast<double>(correct) / static_cast<double>(test.size());
}

} // namespace

TEST(Execute, MatchesStraightLineOracle) {
	std::size_t train_rows = 0, test_rows = 0;
	double expected = straight_line_people_accuracy(&train_rows, &test_rows);
	EXPECT_EQ(train_rows, 3u);
	EXPECT_EQ(test_rows, 3u);

	auto result = execute(load_plan("people.json"), at_fixtures());
	EXPECT_EQ(result.score.at("accuracy"), expected);
	std::size_t filtered = 0;
	for (const auto &n : result.trace.nodes) {
		if (n.node == "adults") {
			filtered = n.rows;
		}
		if (n.node == "__split") {
			EXPECT_EQ(n.rows, train_rows);
			EXPECT_EQ(n.test_rows, test_rows);
		}
	}
	EXPECT_EQ(filtered, 6u);
}

TEST(Execute, EmptyCsvGivesEmptyTestSet) {
	EXPECT_THROW(execute(load_plan("empty.json"), at_fixtures()), EmptyTestSet);
}

TEST(Execute, MajorityOnAllPositiveTestSet) {
	auto dir = std::filesystem::temp_directory_path() / "pipelens_majority";
	std::filesystem::create_directories(dir);
	std::ofstream(dir / "train.csv") << "x,y\n1,p\n2,p\n3,p\n4,p\n5,p\n6,p\n7,p\n8,n\n9,n\n10,n\n";
	std::ofstream(dir / "test.csv") << "x,y\n1,p\n2,p\n3,p\n";
	auto doc = parse_pipeline(R"({
	  "version": 1,
	  "datasets": {"train": {"path": "train.csv"}, "test": {"path": "test.csv"}},
	  "featurize": [{"column": "x", "encoder": "standard_scale"}],
	  "label": {"column": "y", "positive": "p"},
	  "test_dataset": "test",
	  "model": {"kind": "majority"}
	})");
	ExecuteOptions o;
	o.data_root = dir;
	auto result = execute(build_plan(doc, load_schemas(doc, dir)), o);
	EXPECT_EQ(result.score.at("accuracy"), 1.0);
	std::filesystem::remove_all(dir);
}

TEST(Execute, DeterministicAcrossRuns) {
	for (const char *name : {"healthcare.json", "people_extended.json", "fairness.json"}) {
		auto plan = load_plan(name);
		auto a = execute(plan, at_fixtures());
		auto b = execute(plan, at_fixtures());
		EXPECT_EQ(a.score, b.score) << name;
		EXPECT_EQ(to_json(a.trace).dump(), to_json(b.trace).dump()) << name;
	}
}

TEST(Execute, CountsEveryNodeOnce) {
	auto plan = load_plan("healthcare.json");
	auto result = execute(plan, at_fixtures());
	EXPECT_EQ(result.trace.operator_count, plan.size());
	EXPECT_EQ(result.trace.nodes.size(), plan.size());
	EXPECT_GT(result.trace.peak_live, 0u);
	EXPECT_LT(result.trace.peak_live, plan.size());
}

TEST(Execute, RejectsInvalidAndMultiSinkPlans) {
	Plan bad;
	bad.add_node({"sel", OpKind::Selection, SelectionParams {parse_predicate("a > 1")}, {{"x"}}});
	EXPECT_THROW(execute(bad, at_fixtures()), InvalidPlan);

	auto plan = load_plan("people.json");
	plan.add_node({"extra", OpKind::Projection, ProjectionParams {{"age"}}, {{"adults"}}});
	plan.set_sinks({"__score", "extra"});
	ASSERT_TRUE(validate(plan).empty());
	EXPECT_THROW(execute(plan, at_fixtures()), Error);
}

TEST(Execute, MissingDataFileIsIoError) {
	ExecuteOptions o;
	o.data_root = "/nonexistent";
	EXPECT_THROW(execute(load_plan("people.json"), o), IoError);
}

TEST(Execute, ExecuteToStopsAtTarget) {
	auto plan = load_plan("healthcare.json");
	auto d = execute_to(plan, {"adults"}, at_fixtures());
	const auto &rel = std::get<Relation>(d);
	EXPECT_EQ(rel.size(), 16u);
	auto test_side = execute_to(plan, {"__split", Port::Test}, at_fixtures());
	EXPECT_EQ(std::get<Relation>(test_side).size(), 6u);
}

TEST(EvalOperator, SelectionNullIsFalse) {
	Relation in = make_relation("s", Schema({{"a", ValueType::Int}}), {{Value(1)}, {Value(2)}, {Value()}});
	PlanNode sel {"sel", OpKind::Selection, SelectionParams {parse_predicate("a > 1")}, {{"s"}}};
	Datum d = in;
	auto out = eval_operator(sel, {&d}, {});
	const auto &rel = std::get<Relation>(out.at(0).second);
	ASSERT_EQ(rel.size(), 1u);
	EXPECT_EQ(rel.rows[0][0], Value(2));
	EXPECT_EQ(rel.row_ids[0], (RowId {"s", 1}));
}

TEST(EvalOperator, ProjectionAndExtendedProjection) {
	Relation in = make_relation("s", Schema({{"a", ValueType::Int}, {"b", ValueType::Text}}),
	                            {{Value(1), Value("x")}, {Value(5), Value("y")}});
	Datum d = in;
	PlanNode proj {"p", OpKind::Projection, ProjectionParams {{"b", "a"}}, {{"s"}}};
	auto p = std::get<Relation>(eval_operator(proj, {&d}, {}).at(0).second);
	EXPECT_EQ(p.rows[1], (Row {Value("y"), Value(5)}));
	PlanNode ext {"e", OpKind::ExtendedProjection, ExtendedProjectionParams {"big", parse_predicate("a > 2")}, {{"s"}}};
	auto e = std::get<Relation>(eval_operator(ext, {&d}, {}).at(0).second);
	EXPECT_EQ(e.schema.names(), (std::vector<std::string> {"a", "b", "big"}));
	EXPECT_EQ(e.rows[0][2], Value(false));
	EXPECT_EQ(e.rows[1][2], Value(true));
}

TEST(EvalOperator, ConcatRequiresAlignment) {
	FeatureMatrix a;
	a.n_rows = 2;
	a.n_cols = 1;
	a.data = {1, 2};
	a.row_ids = {{"s", 0}, {"s", 1}};
	a.annotations = AnnotationTable(2, 0);
	FeatureMatrix b = a;
	b.data = {3, 4};
	Datum da = a, db = b;
	PlanNode cat {"c", OpKind::Concat, std::monostate {}, {{"a"}, {"b"}}};
	auto m = std::get<FeatureMatrix>(eval_operator(cat, {&da, &db}, {}).at(0).second);
	EXPECT_EQ(m.n_cols, 2u);
	EXPECT_EQ(m.data, (std::vector<double> {1, 3, 2, 4}));
	std::get<FeatureMatrix>(db).row_ids = {{"s", 1}, {"s", 0}};
	EXPECT_THROW(eval_operator(cat, {&da, &db}, {}), AlignmentError);
}

TEST(EvalOperator, LabelExtractRejectsNull) {
	Datum d = make_relation("s", Schema({{"y", ValueType::Text}}), {{Value("p")}, {Value()}});
	PlanNode lab {"l", OpKind::LabelExtract, LabelParams {"y", "p", std::nullopt}, {{"s"}}};
	EXPECT_THROW(eval_operator(lab, {&d}, {}), MissingLabel);
}

TEST(EvalOperator, TransformWarnsOnUnseenAndNull) {
	Datum train = make_relation("s", Schema({{"c", ValueType::Text}}), {{Value("a")}, {Value("b")}});
	Datum test = make_relation("t", Schema({{"c", ValueType::Text}}), {{Value("a")}, {Value("z")}, {Value()}});
	PlanNode fit {"f", OpKind::EstimatorFit, EncoderParams {"c", "c", Encoder::OneHot}, {{"s"}}};
	PlanNode tf {"t", OpKind::Transform, EncoderParams {"c", "c", Encoder::OneHot}, {{"f"}, {"t"}}};
	auto stats = eval_operator(fit, {&train}, {}).at(0).second;
	std::vector<std::string> warnings;
	auto m = std::get<FeatureMatrix>(eval_operator(tf, {&stats, &test}, {}, &warnings).at(0).second);
	EXPECT_EQ(m.data, (std::vector<double> {1, 0, 0, 0, 0, 0}));
	ASSERT_EQ(warnings.size(), 2u);
	EXPECT_NE(warnings[0].find("z"), std::string::npos);
}

TEST(Encoders, OneHotSortedCategories) {
	auto rel = make_relation("s", Schema({{"c", ValueType::Text}}), {{Value("b")}, {Value("a")}, {Value("b")}});
	auto fitted = fit_encoder(rel, "c", Encoder::OneHot);
	EXPECT_EQ(std::get<OneHotStats>(fitted.stats).categories, (std::vector<std::string> {"a", "b"}));
	auto probe = make_relation("p", Schema({{"c", ValueType::Text}}), {{Value("b")}});
	auto m = transform(fitted, probe, "c");
	EXPECT_EQ(m.data, (std::vector<double> {0.0, 1.0}));
	EXPECT_EQ(m.columns, (std::vector<std::string> {"c__f0", "c__f1"}));
}

TEST(Encoders, ScalerPopulationStd) {
	auto rel = make_relation("s", Schema({{"x", ValueType::Float}}), {{Value(1.0)}, {Value(2.0)}, {Value(3.0)}});
	auto fitted = fit_encoder(rel, "x", Encoder::StandardScale);
	const auto &s = std::get<ScalerStats>(fitted.stats);
	EXPECT_NEAR(s.mean, 2.0, 1e-12);
	EXPECT_NEAR(s.std, std::sqrt(2.0 / 3.0), 1e-12);
	auto probe = make_relation("p", Schema({{"x", ValueType::Float}}), {{Value(2.0)}});
	EXPECT_EQ(transform(fitted, probe, "x").data, (std::vector<double> {0.0}));
}

TEST(Encoders, ConstantColumnUsesFloor) {
	auto rel = make_relation("s", Schema({{"x", ValueType::Int}}), {{Value(4)}, {Value(4)}});
	auto fitted = fit_encoder(rel, "x", Encoder::StandardScale);
	EXPECT_EQ(std::get<ScalerStats>(fitted.stats).std, kScalerStdFloor);
	auto m = transform(fitted, rel, "x");
	for (double v : m.data) {
		EXPECT_FALSE(std::isnan(v));
	}
}

TEST(Encoders, NonNumericScaling) {
	auto rel = make_relation("s", Schema({{"x", ValueType::Text}}), {{Value("a")}});
	EXPECT_THROW(fit_encoder(rel, "x", Encoder::StandardScale), NonNumeric);
	EXPECT_THROW(fit_encoder(rel, "nope", Encoder::OneHot), UnknownColumn);
}

TEST(SplitAssign, ShareOverThousandIds) {
	std::size_t test = 0;
	for (std::uint64_t i = 0; i < 1000; i++) {
		test += split_assign({"synthetic", i}, 42, 0.2) == SplitSide::Test ? 1 : 0;
	}
	double share = static_cast<double>(test) / 1000.0;
	EXPECT_GE(share, 0.15);
	EXPECT_LE(share, 0.25);
}

TEST(SplitAssign, MatchesThresholdRuleAndIsPure) {
	std::vector<RowId> ids;
	for (std::uint64_t i = 0; i < 200; i++) {
		ids.push_back({"src", i});
	}
	std::vector<SplitSide> forward;
	for (const auto &id : ids) {
		forward.push_back(split_assign(id, 7, 0.3));
		double bucket = static_cast<double>(oracle_fnv(7, id.source, id.index) % 1000000) / 1e6;
		EXPECT_EQ(forward.back() == SplitSide::Test, bucket < 0.3);
		// vanishing fraction: only bucket 0 goes to test
		EXPECT_EQ(split_assign(id, 7, 1e-9) == SplitSide::Test, bucket == 0.0);
	}
	std::mt19937 rng(1);
	std::vector<std::size_t> perm(ids.size());
	std::iota(perm.begin(), perm.end(), 0);
	std::shuffle(perm.begin(), perm.end(), rng);
	for (auto i : perm) {
		EXPECT_EQ(split_assign(ids[i], 7, 0.3), forward[i]);
	}
}

TEST(Join, MatchesNestedLoopWithLineage) {
	std::mt19937 rng(11);
	std::uniform_int_distribution<int> key(0, 6);
	std::uniform_int_distribution<int> coin(0, 9);
	for (int trial = 0; trial < 20; trial++) {
		std::size_t nl = 1 + rng() % 60, nr = 1 + rng() % 60;
		std::vector<Row> lrows, rrows;
		for (std::size_t i = 0; i < nl; i++) {
			lrows.push_back({coin(rng) == 0 ? Value() : Value(key(rng)), Value(static_cast<int>(i))});
		}
		for (std::size_t i = 0; i < nr; i++) {
			// mix Float keys in to exercise widening
			Value k = coin(rng) == 0 ? Value() : (coin(rng) < 5 ? Value(key(rng)) : Value(double(key(rng))));
			rrows.push_back({k, Value("r" + std::to_string(i))});
		}
		Schema ls({{"k", ValueType::Int}, {"v", ValueType::Int}});
		Schema rs({{"k", ValueType::Float}, {"w", ValueType::Text}});
		for (auto &row : rrows) {
			if (row[0].type() == ValueType::Int) {
				row[0] = Value(static_cast<double>(row[0].as_int()));
			}
		}
		LineageInspection lineage;
		ExecuteOptions o;
		o.inspections = {&lineage};
		auto left = make_relation("L", ls, lrows, 1);
		auto right = make_relation("R", rs, rrows, 1);
		for (std::size_t i = 0; i < left.size(); i++) {
			left.annotations.at(i, 0) = LineageSet(left.row_ids[i]);
		}
		for (std::size_t i = 0; i < right.size(); i++) {
			right.annotations.at(i, 0) = LineageSet(right.row_ids[i]);
		}
		Datum dl = left, dr = right;
		PlanNode join {"j", OpKind::Join, JoinParams {"k"}, {{"L"}, {"R"}}};
		auto out = std::get<Relation>(eval_operator(join, {&dl, &dr}, o).at(0).second);

		std::vector<std::pair<Row, LineageSet>> expected;
		for (std::size_t i = 0; i < nl; i++) {
			for (std::size_t j = 0; j < nr; j++) {
				const auto &a = lrows[i][0];
				const auto &b = rrows[j][0];
				if (a.is_null() || b.is_null() || static_cast<double>(a.as_int()) != b.as_float()) {
					continue;
				}
				LineageSet ls2;
				ls2.insert({"L", i});
				ls2.insert({"R", j});
				expected.push_back({{a, lrows[i][1], rrows[j][1]}, ls2});
			}
		}
		std::vector<std::pair<Row, LineageSet>> actual;
		for (std::size_t r = 0; r < out.size(); r++) {
			actual.push_back({out.rows[r], std::get<LineageSet>(out.annotations.at(r, 0))});
		}
		// nested loop order is (left index, right index), the required output order
		ASSERT_EQ(actual.size(), expected.size());
		for (std::size_t r = 0; r < actual.size(); r++) {
			EXPECT_EQ(actual[r].first, expected[r].first);
			EXPECT_EQ(actual[r].second, expected[r].second);
		}
	}
}
