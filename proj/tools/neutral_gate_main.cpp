#include <iostream>

#include "neutral_gate/cli.hpp"

int main(int argc, char** argv) { return ngate::run_cli(argc, argv, std::cout, std::cerr); }
