// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rtbpa {

enum ExitCode : int {
    kExitOk = 0,
    kExitParse = 2,
    kExitShape = 3,
    kExitUnknown = 4,
    kExitNumeric = 5,
};

// Entry point of the rtbpa tool; args excludes the program name.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace rtbpa
