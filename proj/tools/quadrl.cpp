#include <iostream>

#include "quadrl/cli.hpp"

int main(int argc, char** argv) { return quadrl::cli::run(argc, argv, std::cout, std::cerr); }
