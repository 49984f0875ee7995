#include <iostream>

#include "nudgekit_cli/commands.hpp"

int main(int argc, char** argv) { return nudgekit::cli::run_cli(argc, argv, std::cout, std::cerr); }
