#include <iostream>

#include "schelling/commands.hpp"

int main(int argc, char** argv) {
    return schelling::run_cli(argc, argv, std::cout, std::cerr);
}
