#include <iostream>

#include "calppi/cli.hpp"

int main(int argc, char** argv) { return calppi::cli::run(argc, argv, std::cout, std::cerr); }
