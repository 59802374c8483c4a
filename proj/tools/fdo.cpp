#include "fdo/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return fdo::cli_main(argc, argv, std::cout, std::cerr); }
