#include <iostream>
#include <string>
#include <vector>

#include "goikit/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return goikit::cli::run(args, std::cout, std::cerr);
}
