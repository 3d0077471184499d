#include <iostream>
#include <string>
#include <vector>

#include "latgm/cli.hpp"

int main(int argc, char** argv) {
    return latgm::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
