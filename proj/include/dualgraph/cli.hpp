#pragma once

#include <iosfwd>

namespace dualgraph {

// Entry point of the dualgraph command; returns the process exit code.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace dualgraph
