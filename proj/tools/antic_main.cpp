#include <antic/cli.hpp>

#include <iostream>

int main(int argc, char** argv) { return antic::run_cli(argc, argv, std::cout, std::cerr); }
