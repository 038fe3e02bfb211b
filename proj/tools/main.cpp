#include <iostream>

#include "prh/cli.hpp"

int main(int argc, char** argv) { return prh::cli::main(argc, argv, std::cout, std::cerr); }
