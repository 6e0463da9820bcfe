#ifndef MFHJB_GRID_IO_HPP
#define MFHJB_GRID_IO_HPP

#include <string>
#include <utility>
#include <vector>

#include "mfhjb/measures.hpp"
#include "mfhjb/torus.hpp"

namespace mfhjb {

/**
 * Binary dump layout (little endian): magic "MFHJ", u32 version, u32 d, u32 N,
 * u32 M, u32 has_z, 4-byte payload tag ("REAL" grid values or "CPLX"
 * interleaved re/im coefficients), u64 count, then count payload records of
 * f64 (REAL) or 2xf64 (CPLX).  Coefficient dumps use N = 0 and store the
 * truncation radius in the M field.  Readers reject unknown versions or tags.
 */
void write_grid_dump(const std::string& path, const GridFn& f);
GridFn read_grid_dump(const std::string& path);

void write_coeffs_dump(const std::string& path, const SignedMeasureCoeffs& q);
SignedMeasureCoeffs read_coeffs_dump(const std::string& path);

/** Plain key=value sidecar metadata next to a dump. */
void write_sidecar(const std::string& path,
                   const std::vector<std::pair<std::string, std::string>>& kv);
std::vector<std::pair<std::string, std::string>> read_sidecar(const std::string& path);

} // namespace mfhjb

#endif
