#include <iostream>
#include <string>
#include <vector>

#include "mcdm/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mcdm::cli::run(args, std::cout, std::cerr);
}
