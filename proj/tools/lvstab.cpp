#include <iostream>

#include "lvstab/cli.hpp"

int main(int argc, char** argv) { return lvstab::cli::run(argc, argv, std::cout, std::cerr); }
