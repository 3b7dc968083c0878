#include <iostream>

#include "mupre/cli.hpp"

int main(int argc, char** argv) { return mupre::run_cli(argc, argv, std::cout, std::cerr); }
