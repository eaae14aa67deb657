#include <iostream>

#include "oneshot/harness.hpp"

int main(int argc, char** argv) { return oneshot::cli_main(argc, argv, std::cout, std::cerr); }
