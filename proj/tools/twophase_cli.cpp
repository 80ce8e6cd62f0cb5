#include <iostream>

#include "twophase/commands.hpp"

int main(int argc, char** argv) { return twophase::run_cli(argc, argv, std::cerr); }
