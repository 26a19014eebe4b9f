#include <iostream>

#include "zesrec/cli.hpp"

int main(int argc, char** argv) { return zesrec::run_cli(argc, argv, std::cout, std::cerr); }
