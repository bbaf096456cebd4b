#include <iostream>

#include "triphase/cli.hpp"

int main(int argc, char** argv) { return triphase::run_cli(argc, argv, std::cout, std::cerr); }
