#ifndef MFHJB_REPORT_HPP
#define MFHJB_REPORT_HPP

#include <cstdint>
#include <string>

#include <json.hpp>

#include "mfhjb/config.hpp"

namespace mfhjb {

std::uint64_t fnv1a(const std::string& s);

/**
 * JSON run summary: command, canonical config echo with its hash, named
 * checks (measured value against threshold), free-form values, and timings.
 * Identical config + seed produce identical reports except for the timings
 * block.
 */
class RunReport {
  public:
    RunReport(const std::string& command, const ExperimentConfig& cfg);

    void add_check(const std::string& name, bool pass, double measured, double threshold,
                   const std::string& note = "");
    void add_value(const std::string& key, const nlohmann::json& v);
    void add_timing(const std::string& key, double seconds);

    bool all_passed() const;
    const nlohmann::json& json() const { return j_; }
    void write(const std::string& path) const;

  private:
    nlohmann::json j_;
};

} // namespace mfhjb

#endif
