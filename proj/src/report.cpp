#include "mfhjb/report.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "mfhjb/errors.hpp"

namespace mfhjb {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

RunReport::RunReport(const std::string& command, const ExperimentConfig& cfg) {
    const std::string echo = config_echo(cfg);
    std::ostringstream hash;
    hash << std::hex << std::setfill('0') << std::setw(16) << fnv1a(echo);
    j_["command"] = command;
    j_["config_text"] = echo;
    j_["config_hash"] = hash.str();
    j_["checks"] = nlohmann::json::array();
    j_["values"] = nlohmann::json::object();
    j_["timings"] = nlohmann::json::object();
}

void RunReport::add_check(const std::string& name, bool pass, double measured, double threshold,
                          const std::string& note) {
    nlohmann::json c;
    c["name"] = name;
    c["pass"] = pass;
    c["measured"] = measured;
    c["threshold"] = threshold;
    if (!note.empty()) c["note"] = note;
    j_["checks"].push_back(std::move(c));
}

void RunReport::add_value(const std::string& key, const nlohmann::json& v) {
    j_["values"][key] = v;
}

void RunReport::add_timing(const std::string& key, double seconds) {
    j_["timings"][key] = seconds;
}

bool RunReport::all_passed() const {
    for (const auto& c : j_["checks"])
        if (!c["pass"].get<bool>()) return false;
    return true;
}

void RunReport::write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw invalid_input_error("cannot open for writing: " + path);
    out << j_.dump(2) << "\n";
    if (!out) throw invalid_input_error("write failed: " + path);
}

} // namespace mfhjb
