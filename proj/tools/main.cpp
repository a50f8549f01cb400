#include "lsgrf/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return lsgrf::cli::run(argc, argv, std::cout, std::cerr); }
