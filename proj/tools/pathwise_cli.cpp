#include <pathwise/cli.hpp>

#include <iostream>

int main(int argc, char** argv) { return pathwise::run_cli(argc, argv, std::cout, std::cerr); }
