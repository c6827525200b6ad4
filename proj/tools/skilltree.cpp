#include <iostream>

#include "skilltree/cli/commands.hpp"

int main(int argc, char** argv) { return skilltree::cli::run_cli(argc, argv, std::cout, std::cerr); }
