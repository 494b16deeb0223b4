// SPDX-License-Identifier: Apache-2.0
#include "rtbpa/cli.hpp"

#include <iostream>

int main(int argc, char **argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return rtbpa::run_cli(args, std::cout, std::cerr);
}
