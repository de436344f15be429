#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) { return ldgas::cli::run(argc, argv, std::cout, std::cerr); }
