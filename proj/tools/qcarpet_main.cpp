#include <iostream>
#include <string>
#include <vector>

#include "qcarpet/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return qcarpet::cli::run(args, std::cout, std::cerr);
}
