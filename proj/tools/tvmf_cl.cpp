#include <iostream>

#include "tvmf/cli.hpp"

int main(int argc, char** argv) { return tvmf::run_cli(argc, argv, std::cout, std::cerr); }
