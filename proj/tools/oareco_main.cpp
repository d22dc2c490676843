#include <iostream>

#include "oareco/cli.hpp"

int main(int argc, char** argv) { return oareco::cli::run(argc, argv, std::cout, std::cerr); }
