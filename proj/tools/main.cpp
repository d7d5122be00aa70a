#include <iostream>
#include <string>
#include <vector>

#include "sde/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return sde::cli_run(args, std::cout, std::cerr);
}
