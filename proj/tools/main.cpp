#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
  return stable_bicycle::cli::run(argc, argv, std::cout, std::cerr);
}
