#include <iostream>
#include <string>
#include <vector>

#include "peerfx/cli.hpp"

int main(int argc, char** argv) {
  return peerfx::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
