#include <vector>

#include "coresim/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return coresim::cli::run(args);
}
