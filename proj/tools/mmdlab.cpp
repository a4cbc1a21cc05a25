#include <iostream>
#include <string>
#include <vector>

#include "mmdlab/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return mmdlab::cli::run(args, std::cout, std::cerr);
}
