#include <filesystem>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "commands.hpp"
#include "softlabel/error.hpp"

int main(int argc, char** argv) {
    using namespace softlabel;
    CLI::App app{"Soft-label multitask classification pipeline", "softlabel"};
    app.require_subcommand(1);

    auto commands = cli::all_commands();
    std::vector<std::unique_ptr<cli::Settings>> settings;
    std::vector<CLI::App*> subs;
    for (auto& c : commands) {
        auto* sub = app.add_subcommand(c.name, c.help);
        settings.push_back(std::make_unique<cli::Settings>(c.keys));
        settings.back()->bind(*sub);
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ExitCode::Usage);
    }

    for (std::size_t i = 0; i < commands.size(); ++i) {
        if (!subs[i]->parsed()) continue;
        try {
            settings[i]->resolve();
            return commands[i].run(*settings[i]);
        } catch (const Error& e) {
            std::cerr << "softlabel " << commands[i].name << ": " << e.what() << "\n";
            return static_cast<int>(e.code());
        } catch (const std::filesystem::filesystem_error& e) {
            std::cerr << "softlabel " << commands[i].name << ": " << e.what() << "\n";
            return static_cast<int>(ExitCode::Data);
        } catch (const std::exception& e) {
            std::cerr << "softlabel " << commands[i].name << ": " << e.what() << "\n";
            return 1;
        }
    }
    return static_cast<int>(ExitCode::Usage);
}
