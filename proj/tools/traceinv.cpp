#include "traceinv/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return traceinv::run_cli(argc, argv, std::cout, std::cerr); }
