#include "css/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return css::run_cli(argc, argv, std::cout, std::cerr); }
