#include <iostream>

#include "sparfima_cli/cli.hpp"

int main(int argc, char** argv) {
  return sparfima::cli::run(argc, argv, std::cout, std::cerr);
}
