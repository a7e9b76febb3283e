#include <iostream>

#include "cvqpu/cli.hpp"

int main(int argc, char** argv) { return cvqpu::run_cli(argc, argv, std::cout, std::cerr); }
