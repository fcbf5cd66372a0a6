#include <iostream>

#include "rrpi/cli.hpp"

int main(int argc, char** argv) { return rrpi::cli_main(argc, argv, std::cout, std::cerr); }
