#include <iostream>
#include <string>
#include <vector>

#include "dsdst/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dsdst::cli::run(args, std::cout, std::cerr);
}
