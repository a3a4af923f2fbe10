#include <iostream>

#include "piezoamp/cli.hpp"

int main(int argc, char** argv) {
  return piezoamp::cli::run(argc, argv, std::cout, std::cerr);
}
