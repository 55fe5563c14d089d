#include <iostream>

#include "pfc/cli.hpp"

int main(int argc, char** argv) { return pfc::run_cli(argc, argv, std::cout, std::cerr); }
