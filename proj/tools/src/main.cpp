#include <iostream>

#include "motrims_cli/commands.hpp"

int main(int argc, char** argv) { return motrims::cli::run(argc, argv, std::cout, std::cerr); }
