#include "cli.hpp"

int main(int argc, char** argv) {
    return roiexplain::cli::run(std::vector<std::string>(argv, argv + argc));
}
