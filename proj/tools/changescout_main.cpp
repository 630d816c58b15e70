#include <iostream>
#include <string>
#include <vector>

#include "changescout/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cs::run(args, std::cout, std::cerr);
}
