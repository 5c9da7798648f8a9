#include "pipelens/cli.hpp"

#include "pipelens/csv.hpp"
#include "pipelens/errors.hpp"
#include "pipelens/executor.hpp"
#include "pipelens/pipeline.hpp"
#include "pipelens/whatif.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace pipelens {

namespace fs = std::filesystem;

namespace {

struct CliConfig {
	std::string pipeline;
	std::string data_root;
	std::string output;
	std::string analysis_config;
	bool json = false;
	bool dot = false;
	bool no_mqo = false;
	bool fail_on_findings = false;
	double tau = kDefaultTau;
	std::optional<std::uint64_t> seed;
};

fs::path resolve_data_root(const CliConfig &cfg) {
	if (!cfg.data_root.empty()) {
		return cfg.data_root;
	}
	if (const char *env = std::getenv("PIPELENS_DATA_ROOT"); env && *env) {
		return env;
	}
	auto parent = fs::path(cfg.pipeline).parent_path();
	return parent.empty() ? fs::path(".") : parent;
}

//! Writes to --output when given, otherwise to `out`.
void emit(const CliConfig &cfg, std::ostream &out, const std::string &text) {
	if (cfg.output.empty()) {
		out << text;
		return;
	}
	std::ofstream f(cfg.output, std::ios::binary);
	if (!f) {
		throw IoError(cfg.output, "cannot open for writing");
	}
	f << text;
}

PipelineDoc load_doc(const CliConfig &cfg) {
	auto doc = parse_pipeline(read_file(cfg.pipeline));
	if (cfg.seed) {
		if (doc.split) {
			doc.split->seed = *cfg.seed;
		}
		doc.model.seed = *cfg.seed;
	}
	return doc;
}

std::string num(double v) {
	return format_double(v);
}

void print_invalid(std::ostream &err, const std::exception &e) {
	err << "error: " << e.what() << "\n";
	if (const auto *ip = dynamic_cast<const InvalidPlan *>(&e)) {
		err << format_diagnostics(ip->diagnostics);
	}
	if (const auto *ia = dynamic_cast<const InvalidAfterPatch *>(&e)) {
		err << format_diagnostics(ia->diagnostics);
	}
}

int cmd_plan(const CliConfig &cfg, std::ostream &out, std::ostream &err) {
	Plan plan;
	try {
		auto doc = load_doc(cfg);
		auto root = resolve_data_root(cfg);
		plan = build_plan(doc, load_schemas(doc, root, true));
		for (const auto &[name, d] : doc.datasets) {
			if (!plan.node(name).get<DataSourceParams>().schema) {
				err << "warning: dataset '" << name << "' not found under " << root.string()
				    << "; column checks skipped downstream of it\n";
			}
		}
	} catch (const Error &e) {
		print_invalid(err, e);
		return kExitInvalid;
	}

	if (cfg.dot) {
		emit(cfg, out, to_dot(plan));
		return kExitOk;
	}
	std::ostringstream text;
	if (cfg.json) {
		nlohmann::json nodes = nlohmann::json::array();
		for (const auto &id : topological_order(plan)) {
			const auto &n = plan.node(id);
			nlohmann::json inputs = nlohmann::json::array();
			for (const auto &e : n.inputs) {
				inputs.push_back(e.to_string());
			}
			nodes.push_back({{"id", id},
			                 {"op", std::string(to_string(n.kind))},
			                 {"inputs", inputs},
			                 {"params", params_to_json(n)}});
		}
		text << nlohmann::json({{"valid", true}, {"nodes", nodes}, {"diagnostics", nlohmann::json::array()}}).dump(2)
		     << "\n";
	} else {
		text << "valid plan: " << plan.size() << " nodes, sink " << plan.sinks().front() << "\n";
		for (const auto &id : topological_order(plan)) {
			const auto &n = plan.node(id);
			std::ostringstream line;
			line << "  " << std::left << std::setw(24) << id << " " << std::setw(18) << to_string(n.kind);
			for (std::size_t i = 0; i < n.inputs.size(); i++) {
				line << (i == 0 ? " <- " : ", ") << n.inputs[i].to_string();
			}
			auto s = line.str();
			text << s.substr(0, s.find_last_not_of(' ') + 1) << "\n";
		}
	}
	emit(cfg, out, text.str());
	return kExitOk;
}

int cmd_run(const CliConfig &cfg, std::ostream &out, std::ostream &err) {
	PipelineDoc doc;
	Plan plan;
	fs::path root = resolve_data_root(cfg);
	try {
		doc = load_doc(cfg);
		plan = build_plan(doc, load_schemas(doc, root, true));
	} catch (const SyntaxError &e) {
		print_invalid(err, e);
		return kExitInvalid;
	} catch (const SemanticError &e) {
		print_invalid(err, e);
		return kExitInvalid;
	} catch (const CsvError &e) {
		err << "error: " << e.what() << "\n";
		return kExitExecution;
	} catch (const Error &e) {
		print_invalid(err, e);
		return kExitInvalid;
	}

	LineageInspection lineage;
	std::optional<HistogramInspection> histogram;
	ExecuteOptions opts;
	opts.data_root = root;
	opts.inspections.push_back(&lineage);
	if (doc.sensitive) {
		histogram.emplace(doc.sensitive->column);
		opts.inspections.push_back(&*histogram);
	}
	Edge test_edge = plan.node("__label_test").inputs.at(0);
	opts.retain = {test_edge, {"__predict", Port::Out}, {"__label_test", Port::Out}};

	ExecutionResult result;
	try {
		result = execute(plan, opts);
	} catch (const Error &e) {
		err << "error: " << e.what() << "\n";
		return kExitExecution;
	}

	std::vector<DistributionFinding> findings;
	if (histogram) {
		findings = check_distributions(histogram->histograms(), cfg.tau);
	}
	std::optional<SliceReport> slices;
	if (doc.sensitive) {
		try {
			slices = slice_scores(std::get<Predictions>(result.retained.at("__predict")),
			                      std::get<LabelVector>(result.retained.at("__label_test")),
			                      std::get<Relation>(result.retained.at(test_edge.to_string())), doc.sensitive->column);
		} catch (const Error &e) {
			err << "error: " << e.what() << "\n";
			return kExitExecution;
		}
	}
	std::size_t flagged = 0;
	for (const auto &f : findings) {
		flagged += f.flagged ? 1 : 0;
	}

	std::ostringstream text;
	if (cfg.json) {
		auto trace = to_json(result.trace);
		trace["inspections"] = nlohmann::json::object();
		for (auto *insp : opts.inspections) {
			trace["inspections"][insp->name()] = insp->result();
		}
		nlohmann::json doc_out = {{"score", to_json(result.score)},
		                          {"findings", to_json(findings)},
		                          {"slices", slices ? to_json(*slices) : nlohmann::json(nullptr)},
		                          {"trace", trace}};
		text << doc_out.dump(2) << "\n";
	} else {
		text << "score\n";
		for (const auto &[name, v] : result.score.metrics) {
			text << "  " << name << " = " << num(v) << "\n";
		}
		if (histogram) {
			text << "findings (tau " << num(cfg.tau) << "): " << flagged << " flagged\n";
			for (const auto &f : findings) {
				if (!f.flagged) {
					continue;
				}
				text << "  " << f.node << "  " << histogram->column() << "=" << f.group.to_text() << "  "
				     << num(f.proportion_before) << " -> " << num(f.proportion_after) << "  ratio "
				     << (std::isfinite(f.ratio) ? num(f.ratio) : "inf") << "\n";
			}
		}
		if (slices) {
			text << "slices by " << slices->column << " (overall accuracy " << num(slices->overall) << ")\n";
			for (const auto &[group, s] : slices->groups) {
				text << "  " << group.to_text() << "  rows " << s.rows << "  accuracy " << num(s.accuracy) << "\n";
			}
		}
		for (const auto &n : result.trace.nodes) {
			for (const auto &w : n.warnings) {
				text << "warning: " << n.node << ": " << w << "\n";
			}
		}
	}
	emit(cfg, out, text.str());
	return cfg.fail_on_findings && flagged > 0 ? kExitFindings : kExitOk;
}

int cmd_whatif(const CliConfig &cfg, std::ostream &out, std::ostream &err) {
	Plan plan;
	nlohmann::json config;
	fs::path root = resolve_data_root(cfg);
	try {
		auto doc = load_doc(cfg);
		plan = build_plan(doc, load_schemas(doc, root, true));
		try {
			config = nlohmann::json::parse(read_file(cfg.analysis_config));
		} catch (const nlohmann::json::parse_error &e) {
			throw SemanticError(cfg.analysis_config, e.what());
		}
	} catch (const CsvError &e) {
		err << "error: " << e.what() << "\n";
		return kExitExecution;
	} catch (const Error &e) {
		print_invalid(err, e);
		return kExitInvalid;
	}

	AnalysisReport report;
	try {
		report = run_analysis(plan, config, {root, !cfg.no_mqo});
	} catch (const SemanticError &e) {
		print_invalid(err, e);
		return kExitInvalid;
	} catch (const UnknownTarget &e) {
		print_invalid(err, e);
		return kExitInvalid;
	} catch (const InvalidAfterPatch &e) {
		print_invalid(err, e);
		return kExitInvalid;
	} catch (const ConflictingPatches &e) {
		print_invalid(err, e);
		return kExitInvalid;
	} catch (const Error &e) {
		err << "error: " << e.what() << "\n";
		return kExitExecution;
	}

	std::ostringstream text;
	if (cfg.json) {
		text << to_json(report).dump(2) << "\n";
	} else {
		text << report.analysis << "\nbaseline";
		for (const auto &[name, v] : report.baseline.metrics) {
			text << "  " << name << " = " << num(v);
		}
		text << "\n";
		for (const auto &v : report.variants) {
			text << "  " << std::left << std::setw(28) << v.label;
			if (!v.score) {
				text << "  failed: " << v.error << "\n";
				continue;
			}
			for (const auto &[name, s] : v.score->metrics) {
				double d = v.delta.at(name);
				text << "  " << name << " = " << num(s) << " (" << (d >= 0 ? "+" : "") << num(d) << ")";
			}
			if (v.importance) {
				text << "  importance " << num(*v.importance);
			}
			text << "\n";
		}
		text << "reuse: naive " << report.reuse.naive_operator_count << ", merged "
		     << report.reuse.merged_operator_count << ", shared " << report.reuse.shared_node_count << "\n";
		for (const auto &w : report.warnings) {
			text << "warning: " << w << "\n";
		}
	}
	emit(cfg, out, text.str());
	for (const auto &v : report.variants) {
		if (!v.error.empty()) {
			err << "error: variant " << v.label << ": " << v.error << "\n";
		}
	}
	return report.failed() ? kExitExecution : kExitOk;
}

} // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
	CLI::App app {"Inspect ML pipelines as dataflow plans and run what-if analyses", "pipelens"};
	app.require_subcommand(1);
	CliConfig cfg;

	auto common = [&](CLI::App *sub) {
		sub->add_option("pipeline", cfg.pipeline, "Pipeline document (JSON)")->required();
		sub->add_option("--data-root", cfg.data_root,
		                "Directory dataset paths are relative to (default: $PIPELENS_DATA_ROOT, then the "
		                "pipeline's directory)");
		sub->add_option("-o,--output", cfg.output, "Write the report to this file instead of stdout");
		sub->add_flag("--json", cfg.json, "Emit JSON");
	};
	auto *plan = app.add_subcommand("plan", "Validate a pipeline and show its plan");
	common(plan);
	plan->add_flag("--dot", cfg.dot, "Emit the plan as GraphViz DOT");

	auto *run = app.add_subcommand("run", "Execute a pipeline with inspections");
	common(run);
	run->add_option("--tau", cfg.tau, "Distribution-shift threshold in (0, 1]")->check(CLI::Range(1e-9, 1.0));
	run->add_option("--seed", cfg.seed, "Override every seed in the document");
	run->add_flag("--fail-on-findings", cfg.fail_on_findings, "Exit with 3 when a finding is flagged");

	auto *whatif = app.add_subcommand("whatif", "Run a what-if analysis over pipeline variants");
	common(whatif);
	whatif->add_option("--analysis-config", cfg.analysis_config, "Analysis config (JSON)")->required();
	whatif->add_option("--seed", cfg.seed, "Override every seed in the document");
	whatif->add_flag("--no-mqo", cfg.no_mqo, "Execute every variant on its own");

	try {
		app.parse(argc, argv);
	} catch (const CLI::ParseError &e) {
		int code = app.exit(e, out, err);
		return code == 0 ? kExitOk : kExitInvalid;
	}

	try {
		if (plan->parsed()) {
			return cmd_plan(cfg, out, err);
		}
		if (run->parsed()) {
			return cmd_run(cfg, out, err);
		}
		return cmd_whatif(cfg, out, err);
	} catch (const IoError &e) {
		err << "error: " << e.what() << "\n";
		return kExitInvalid;
	} catch (const std::exception &e) {
		err << "error: " << e.what() << "\n";
		return kExitExecution;
	}
}

} // namespace pipelens
