#ifndef MFHJB_ERRORS_HPP
#define MFHJB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mfhjb {

/** Bad arguments to a numerical operation (dimension mismatch, NaN input, ...). */
struct invalid_input_error : std::runtime_error {
    explicit invalid_input_error(const std::string& msg) : std::runtime_error(msg) {}
};

/** Invalid or inconsistent configuration; maps to CLI exit code 2. */
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

/** Memory budget or size-limit violation; maps to CLI exit code 3. */
struct resource_error : std::runtime_error {
    explicit resource_error(const std::string& msg) : std::runtime_error(msg) {}
};

/** Numerical blow-up (NaN/Inf detected mid-run). */
struct divergence_error : std::runtime_error {
    explicit divergence_error(const std::string& msg) : std::runtime_error(msg) {}
};

/** Operation not available for the given data (e.g. no action structure attached). */
struct unsupported_error : std::runtime_error {
    explicit unsupported_error(const std::string& msg) : std::runtime_error(msg) {}
};

/** A diagnostic could not be computed from the requested inputs. */
struct diagnostic_error : std::runtime_error {
    explicit diagnostic_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace mfhjb

#endif
