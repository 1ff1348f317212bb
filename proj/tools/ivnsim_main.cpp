#include "ivnsim/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return ivnsim::cli::main(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
