#ifndef CMUX_IO_HPP
#define CMUX_IO_HPP

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "cmux/fft.hpp"
#include "cmux/solvers.hpp"

namespace cmux {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Binary container: 24-byte header (8-byte magic tag, u64 rows, u64 cols,
// little endian) followed by row-major (re, im) float64 pairs.  The magic
// carries the payload kind.
namespace magic {
inline constexpr char kMatrix[9] = "CMUXMAT1";   // coefficient / generic matrix
inline constexpr char kCodes[9] = "CMUXCOD1";    // modulation codes (omega x M)
inline constexpr char kFilters[9] = "CMUXFLT1";  // filter spectra (M x omega)
inline constexpr char kSamples[9] = "CMUXSMP1";  // sample vector (omega x 1)
}  // namespace magic

void write_cmx(const std::filesystem::path& path, const CMat& matrix,
               const char* magic_tag = magic::kMatrix);
CMat read_cmx(const std::filesystem::path& path,
              const char* expected_magic = magic::kMatrix);

// CSV export, one row per signal, header "re_0,im_0,...".
void write_matrix_csv(const std::filesystem::path& path, const CMat& matrix);

// Raw recording ingestion: CSV with one column per channel, one row per time
// sample, optional non-numeric header row.  Returns samples x channels.
RMat read_recording_csv(const std::filesystem::path& path);

// FNV-1a over the file bytes; used in manifests for reproducibility checks.
std::uint64_t file_content_hash(const std::filesystem::path& path);

std::string solver_report_json(const SolverReport& report,
                               bool include_trace = false);
void write_solver_report(const std::filesystem::path& path,
                         const SolverReport& report,
                         bool include_trace = false);

std::string format_double(double v);  // shortest round-trippable decimal

}  // namespace cmux

#endif
