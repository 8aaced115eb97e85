#include <iostream>

#include "evr/cli.hpp"

int main(int argc, char** argv) { return evr::run_cli(argc, argv, std::cout, std::cerr); }
