#include <iostream>
#include <vector>

#include "mass/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mass::run_cli(args, std::cout, std::cerr);
}
