#include "fpme/harness.hpp"

#include <iostream>

int main(int argc, char** argv) { return fpme::run_cli(argc, argv, std::cout, std::cerr); }
