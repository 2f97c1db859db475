#include <iostream>

#include "eulerlab/cli.hpp"

int main(int argc, char** argv) { return eulerlab::cli::run(argc, argv, std::cout, std::cerr); }
