#pragma once

#include <string>
#include <vector>

namespace coresim::cli {

// Exit codes: 0 success, 1 runtime failure, 2 configuration or usage error.
int run(const std::vector<std::string>& args);

}  // namespace coresim::cli
