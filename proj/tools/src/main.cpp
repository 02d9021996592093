#include <iostream>

#include "hsepsr/cli.hpp"

int main(int argc, char** argv) { return hsepsr::cli::run(argc, argv, std::cout, std::cerr); }
