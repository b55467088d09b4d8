#include <iostream>

#include "lfht/cli.hpp"

int main(int argc, char** argv) { return lfht::cli::run(argc, argv, std::cout, std::cerr); }
