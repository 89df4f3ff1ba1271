#include <iostream>
#include <string>
#include <vector>

#include "jenn/cli.hpp"

int main(int argc, char** argv) {
    return jenn::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
