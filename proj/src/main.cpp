#include <string>
#include <vector>

#include "taxodng/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return taxodng::cli::run(args);
}
