#include "facegen/cli/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return facegen::run_cli({argv, argv + argc}, std::cout, std::cerr); }
