#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "drpg/cli.hpp"

namespace drpg::test {

struct CliRun {
    int code = -1;
    std::string out;
    std::string err;
};

inline CliRun run_cli_args(std::vector<std::string> args)
{
    args.insert(args.begin(), "drpg");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

}  // namespace drpg::test
