#include <string>
#include <vector>

#include "scomp/cli_main.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return scomp::cli::run(args);
}
