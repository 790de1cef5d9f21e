#include <iostream>

#include "filagen/cli.hpp"

int main(int argc, char** argv) { return filagen::run_cli(argc, argv, std::cout, std::cerr); }
