#include <iostream>

#include "adnoise/cli.hpp"

int main(int argc, char** argv) { return adnoise::run_cli(argc, argv, std::cout, std::cerr); }
