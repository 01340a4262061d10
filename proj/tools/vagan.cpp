#include <iostream>
#include <string>
#include <vector>

#include "vagan/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return vagan::run_cli(args, std::cout, std::cerr);
}
