#include <iostream>

#include "cgraph/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cgraph::run_cli(args, std::cin, std::cout, std::cerr);
}
