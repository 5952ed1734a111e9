#include <iostream>

#include "phasenoise/cli.hpp"

int main(int argc, char** argv) {
    return phasenoise::run_cli(argc, argv, std::cout, std::cerr);
}
