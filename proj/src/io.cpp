#include "cmux/io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

namespace cmux {

namespace {

void put_u64(std::ofstream& out, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t get_u64(std::ifstream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

}  // namespace

void write_cmx(const std::filesystem::path& path, const CMat& matrix,
               const char* magic_tag) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(magic_tag, 8);
    put_u64(out, static_cast<std::uint64_t>(matrix.rows()));
    put_u64(out, static_cast<std::uint64_t>(matrix.cols()));
    for (Eigen::Index r = 0; r < matrix.rows(); ++r)
        for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
            const double re = matrix(r, c).real(), im = matrix(r, c).imag();
            out.write(reinterpret_cast<const char*>(&re), sizeof(double));
            out.write(reinterpret_cast<const char*>(&im), sizeof(double));
        }
    if (!out) throw IoError("write failed: " + path.string());
}

CMat read_cmx(const std::filesystem::path& path, const char* expected_magic) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    char tag[8];
    in.read(tag, 8);
    if (!in || std::memcmp(tag, expected_magic, 8) != 0)
        throw IoError("bad magic in " + path.string());
    const auto rows = static_cast<Eigen::Index>(get_u64(in));
    const auto cols = static_cast<Eigen::Index>(get_u64(in));
    if (rows < 0 || cols < 0 || rows * cols > (Eigen::Index{1} << 30))
        throw IoError("implausible dims in " + path.string());
    CMat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
            double re, im;
            in.read(reinterpret_cast<char*>(&re), sizeof(double));
            in.read(reinterpret_cast<char*>(&im), sizeof(double));
            m(r, c) = Complex(re, im);
        }
    if (!in) throw IoError("truncated file: " + path.string());
    return m;
}

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_matrix_csv(const std::filesystem::path& path, const CMat& matrix) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    for (Eigen::Index c = 0; c < matrix.cols(); ++c)
        out << (c ? "," : "") << "re_" << c << ",im_" << c;
    out << "\n";
    for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
        for (Eigen::Index c = 0; c < matrix.cols(); ++c)
            out << (c ? "," : "") << format_double(matrix(r, c).real()) << ","
                << format_double(matrix(r, c).imag());
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path.string());
}

RMat read_recording_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t pos = 0;
                row.push_back(std::stod(cell, &pos));
            } catch (const std::exception&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (rows.empty()) continue;  // header row
            throw IoError("malformed CSV row in " + path.string());
        }
        if (width == 0) width = row.size();
        if (row.size() != width)
            throw IoError("inconsistent channel count in " + path.string());
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError("empty recording: " + path.string());
    RMat m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(width));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < width; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                rows[r][c];
    return m;
}

std::uint64_t file_content_hash(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    return h;
}

std::string solver_report_json(const SolverReport& report, bool include_trace) {
    nlohmann::json j;
    j["iterations"] = report.iterations;
    j["final_residual"] = report.final_residual;
    j["final_objective"] = report.final_objective;
    j["solution_rank"] = report.solution_rank;
    j["converged"] = report.converged;
    j["solution_rows"] = report.solution.entries.rows();
    j["solution_cols"] = report.solution.entries.cols();
    if (include_trace) j["objective_trace"] = report.objective_trace;
    return j.dump(2);
}

void write_solver_report(const std::filesystem::path& path,
                         const SolverReport& report, bool include_trace) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << solver_report_json(report, include_trace) << "\n";
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace cmux
