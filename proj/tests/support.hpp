#pragma once

#include "pipelens/csv.hpp"
#include "pipelens/pipeline.hpp"
#include "pipelens/plan.hpp"

#include <filesystem>
#include <string>

namespace testing_support {

inline std::filesystem::path fixtures() {
	return PIPELENS_FIXTURES;
}

inline std::string fixture(const std::string &name) {
	return (fixtures() / name).string();
}

inline pipelens::PipelineDoc load_doc(const std::string &name) {
	return pipelens::parse_pipeline(pipelens::read_file(fixtures() / name));
}

inline pipelens::Plan load_plan(const std::string &name) {
	auto doc = load_doc(name);
	return pipelens::build_plan(doc, pipelens::load_schemas(doc, fixtures()));
}

} // namespace testing_support
