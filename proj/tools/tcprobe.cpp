#include <cstdlib>
#include <iostream>

#include "tcprobe/cli.hpp"

int main(int argc, char** argv) {
  return tcprobe::cli::main_entry(argc, argv, std::cout, std::cerr, [](const char* name) { return std::getenv(name); });
}
