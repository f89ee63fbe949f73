#pragma once

#include <functional>
#include <string>
#include <vector>

#include "settings.hpp"

namespace softlabel::cli {

struct Command {
    std::string name;
    std::string help;
    std::vector<KeySpec> keys;
    std::function<int(Settings&)> run;
};

std::vector<Command> all_commands();

}  // namespace softlabel::cli
