#include <iostream>

#include "mermin/cli.hpp"

int main(int argc, char** argv) {
  return mermin::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
