#include <iostream>

#include "superatom/commands.hpp"

int main(int argc, char** argv) { return superatom::cli::run(argc, argv, std::cout, std::cerr); }
