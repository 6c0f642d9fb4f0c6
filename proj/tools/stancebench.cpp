#include <iostream>

#include "stancebench/cli.hpp"

int main(int argc, char** argv) {
  return stancebench::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
