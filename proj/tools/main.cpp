#include <iostream>

#include "curveflow/cli.hpp"

int main(int argc, char** argv) { return curveflow::cli::run(argc, argv, std::cout, std::cerr); }
