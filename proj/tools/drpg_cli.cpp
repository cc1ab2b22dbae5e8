#include <iostream>

#include "drpg/cli.hpp"

int main(int argc, char** argv)
{
    return drpg::run_cli(argc, argv, std::cout, std::cerr);
}
