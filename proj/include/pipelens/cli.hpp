#pragma once

#include <iosfwd>

namespace pipelens {

enum ExitCode : int {
	kExitOk = 0,
	//! Unparsable or invalid pipeline, bad analysis config, or bad usage.
	kExitInvalid = 1,
	kExitExecution = 2,
	//! Only with --fail-on-findings.
	kExitFindings = 3,
};

//! Entry point of the `pipelens` binary: subcommands plan, run and whatif.
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace pipelens
