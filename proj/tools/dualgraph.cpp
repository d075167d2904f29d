#include <iostream>

#include "dualgraph/cli.hpp"

int main(int argc, char** argv) { return dualgraph::run_cli(argc, argv, std::cout, std::cerr); }
