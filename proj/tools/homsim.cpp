#include "hom/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return hom::run_cli(argc, argv, std::cout, std::cerr); }
