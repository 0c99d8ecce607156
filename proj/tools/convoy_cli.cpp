#include <iostream>

#include "convoy/cli.hpp"

int main(int argc, char** argv) { return convoy::run_cli(argc, argv, std::cout, std::cerr); }
