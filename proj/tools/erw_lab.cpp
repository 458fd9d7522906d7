#include <iostream>

#include "erwlab/cli.hpp"

int main(int argc, char** argv) { return erwlab::cli_main(argc, argv, std::cout, std::cerr); }
