#include <iostream>

#include "fxmm/cli.hpp"

int main(int argc, char** argv) { return fxmm::run_cli(argc, argv, std::cout, std::cerr); }
