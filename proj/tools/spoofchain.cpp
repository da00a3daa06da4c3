#include <iostream>
#include <string>
#include <vector>

#include "spoofchain/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return spoofchain::run_cli(args, std::cout, std::cerr);
}
