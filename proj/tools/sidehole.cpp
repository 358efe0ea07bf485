#include <iostream>
#include <string>
#include <vector>

#include "sidehole/cli.hpp"

int main(int argc, char** argv) {
  return sidehole::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
