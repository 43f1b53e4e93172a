#include <iostream>
#include <string>
#include <vector>

#include "mlow/commands.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return mlow::cli::run(args, std::cout, std::cerr);
}
