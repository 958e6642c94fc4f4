#pragma once

#include <string>
#include <vector>

namespace radflow::cli {

// Exit codes: 0 ok, 1 runtime failure, 2 configuration error, 3 data error.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

} // namespace radflow::cli
