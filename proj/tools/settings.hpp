#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

namespace softlabel::cli {

struct KeySpec {
    std::string name;           // dotted config key, also the long flag
    std::string default_value;  // empty string means unset
    std::string help;
    std::vector<std::string> aliases;  // extra long flags, without dashes
};

/// Dotted-key configuration for one subcommand. Precedence: flags, then the
/// --config file, then key defaults.
class Settings {
public:
    explicit Settings(std::vector<KeySpec> keys);

    /// Registers --config plus one option per key (and its aliases) on app.
    void bind(CLI::App& app);
    /// Applies the config file and flag values captured by bind().
    void resolve();

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;
    bool explicitly_set(const std::string& key) const;

    std::string str(const std::string& key) const;
    double real(const std::string& key) const;
    std::int64_t integer(const std::string& key) const;
    std::size_t count(const std::string& key) const;
    std::uint64_t seed(const std::string& key) const;
    bool flag(const std::string& key) const;
    std::vector<std::string> list(const std::string& key) const;
    std::vector<double> real_list(const std::string& key) const;
    std::vector<std::uint64_t> seed_list(const std::string& key) const;
    std::filesystem::path path(const std::string& key) const;
    std::filesystem::path required_path(const std::string& key) const;

    /// Every known key with its effective value.
    std::map<std::string, std::string> resolved() const;

private:
    const KeySpec& spec(const std::string& key) const;
    void load_file(const std::filesystem::path& path);

    std::vector<KeySpec> keys_;
    std::map<std::string, std::string> file_values_;
    std::map<std::string, std::string> flag_values_;
    std::map<std::string, std::string> overrides_;
    std::map<std::string, std::string> captured_;
    std::string config_path_;
};

/// Flattens nested JSON objects to dotted keys; arrays become comma lists.
void flatten_json(const nlohmann::json& j, const std::string& prefix, std::map<std::string, std::string>& out);

}  // namespace softlabel::cli
