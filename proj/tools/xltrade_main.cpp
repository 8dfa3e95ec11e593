#include <iostream>

#include "xltrade/app/commands.hpp"

int main(int argc, char** argv) { return xltrade::app::run_cli(argc, argv, std::cout, std::cerr); }
