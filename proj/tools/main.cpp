#include <iostream>

#include "mfdlab/cli.hpp"

int main(int argc, char** argv) {
  return mfdlab::run_subcommand(argc, argv, std::cout, std::cerr);
}
