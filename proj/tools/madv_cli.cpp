#include <iostream>

#include "madv/cli.hpp"

int main(int argc, char** argv) { return madv::cli::run_cli(argc, argv, std::cout, std::cerr); }
