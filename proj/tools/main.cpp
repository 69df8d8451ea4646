#include "freqctl/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return freqctl::run_cli(argc, argv, std::cout, std::cerr);
}
