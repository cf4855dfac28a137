#include "fpscore/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return fpscore::run_cli(argc, argv, std::cout, std::cerr); }
