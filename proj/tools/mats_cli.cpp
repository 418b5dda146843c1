#include "mats/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return mats::cli::main_entry(argc, argv, std::cout, std::cerr); }
