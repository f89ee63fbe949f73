#include "settings.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "softlabel/error.hpp"

namespace softlabel::cli {

namespace {

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string scalar_string(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_null()) return "";
    return v.dump();
}

}  // namespace

void flatten_json(const nlohmann::json& j, const std::string& prefix, std::map<std::string, std::string>& out) {
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            flatten_json(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    } else if (j.is_array()) {
        std::string joined;
        for (const auto& v : j) joined += (joined.empty() ? "" : ",") + scalar_string(v);
        out[prefix] = joined;
    } else {
        out[prefix] = scalar_string(j);
    }
}

Settings::Settings(std::vector<KeySpec> keys) : keys_(std::move(keys)) {}

const KeySpec& Settings::spec(const std::string& key) const {
    auto it = std::find_if(keys_.begin(), keys_.end(), [&](const KeySpec& k) { return k.name == key; });
    if (it == keys_.end()) throw UsageError("unknown config key '" + key + "'");
    return *it;
}

void Settings::bind(CLI::App& app) {
    app.add_option("--config", config_path_, "key=value config file or a run manifest (.json)");
    for (const auto& k : keys_) {
        std::string names = "--" + k.name;
        for (const auto& a : k.aliases) names += ",--" + a;
        std::string help = k.help;
        if (!k.default_value.empty()) help += " [" + k.default_value + "]";
        app.add_option(names, captured_[k.name], help);
    }
}

void Settings::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file '" + path.string() + "'");
    std::map<std::string, std::string> values;
    if (path.extension() == ".json") {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError("config file '" + path.string() + "': " + e.what());
        }
        // A run manifest carries its resolved configuration under "config".
        flatten_json(j.contains("config") ? j["config"] : j, "", values);
    } else {
        std::string line;
        for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
            line = trim(line);
            if (line.empty() || line[0] == '#') continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
            values[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
        }
    }
    for (const auto& [k, v] : values) {
        if (std::none_of(keys_.begin(), keys_.end(), [&](const KeySpec& s) { return s.name == k; }))
            throw UsageError("config file '" + path.string() + "': unknown key '" + k + "'");
        file_values_[k] = v;
    }
}

void Settings::resolve() {
    if (!config_path_.empty()) load_file(config_path_);
    for (const auto& k : keys_) {
        auto it = captured_.find(k.name);
        if (it != captured_.end() && !it->second.empty()) flag_values_[k.name] = it->second;
    }
}

void Settings::set(const std::string& key, const std::string& value) {
    spec(key);
    overrides_[key] = value;
}

bool Settings::explicitly_set(const std::string& key) const {
    return overrides_.contains(key) || flag_values_.contains(key) || file_values_.contains(key);
}

bool Settings::has(const std::string& key) const { return !str(key).empty(); }

std::string Settings::str(const std::string& key) const {
    const auto& s = spec(key);
    for (const auto* m : {&overrides_, &flag_values_, &file_values_}) {
        auto it = m->find(key);
        if (it != m->end()) return it->second;
    }
    return s.default_value;
}

double Settings::real(const std::string& key) const {
    const auto v = str(key);
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw UsageError("--" + key + ": expected a number, got '" + v + "'");
    }
}

std::int64_t Settings::integer(const std::string& key) const {
    const auto v = str(key);
    std::int64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw UsageError("--" + key + ": expected an integer, got '" + v + "'");
    return out;
}

std::size_t Settings::count(const std::string& key) const {
    const auto v = integer(key);
    if (v < 0) throw UsageError("--" + key + ": must be non-negative");
    return static_cast<std::size_t>(v);
}

std::uint64_t Settings::seed(const std::string& key) const {
    const auto v = str(key);
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw UsageError("--" + key + ": expected a non-negative integer, got '" + v + "'");
    return out;
}

bool Settings::flag(const std::string& key) const {
    auto v = str(key);
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw UsageError("--" + key + ": expected true or false, got '" + v + "'");
}

std::vector<std::string> Settings::list(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(str(key));
    for (std::string item; std::getline(ss, item, ',');) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<double> Settings::real_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : list(key)) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("--" + key + ": '" + item + "' is not a number");
        }
    }
    return out;
}

std::vector<std::uint64_t> Settings::seed_list(const std::string& key) const {
    std::vector<std::uint64_t> out;
    for (const auto& item : list(key)) {
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc() || ptr != item.data() + item.size())
            throw UsageError("--" + key + ": '" + item + "' is not a non-negative integer");
        out.push_back(v);
    }
    return out;
}

std::filesystem::path Settings::path(const std::string& key) const { return str(key); }

std::filesystem::path Settings::required_path(const std::string& key) const {
    if (!has(key)) throw UsageError("--" + key + " is required");
    return str(key);
}

std::map<std::string, std::string> Settings::resolved() const {
    std::map<std::string, std::string> out;
    for (const auto& k : keys_) out[k.name] = str(k.name);
    return out;
}

}  // namespace softlabel::cli
