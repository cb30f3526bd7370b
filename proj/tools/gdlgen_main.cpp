#include <iostream>

#include "gdlgen/cli.hpp"

int main(int argc, char** argv) { return gdlgen::run_cli(argc, argv, std::cout, std::cerr); }
