#include <iostream>

#include "chronoctl/cli.hpp"

int main(int argc, char** argv) { return chronoctl::run_cli(argc, argv, std::cout, std::cerr); }
