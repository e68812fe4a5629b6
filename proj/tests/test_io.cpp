#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "cmux/io.hpp"
#include "cmux/prng.hpp"

using namespace cmux;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    return fs::temp_directory_path() / ("cmux_io_test_" + name);
}

CMat random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    CMat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = Complex(rng::gaussian(seed, 0, r * cols + c),
                              rng::gaussian(seed, 1, r * cols + c));
    return m;
}

}  // namespace

TEST_CASE("cmx round-trips matrices bit for bit") {
    const fs::path p = temp_file("roundtrip.cmx");
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Eigen::Index rows = 1 + seed, cols = 7 - seed;
        const CMat m = random_matrix(rows, cols, seed);
        write_cmx(p, m);
        const CMat back = read_cmx(p);
        REQUIRE(back.rows() == rows);
        REQUIRE(back.cols() == cols);
        CHECK(back == m);  // exact, no rounding through text
    }
    // special values survive
    CMat odd(1, 3);
    odd << Complex(0.0, -0.0), Complex(1e-308, 1e308),
        Complex(0.1, -1.0 / 3.0);
    write_cmx(p, odd);
    CHECK(read_cmx(p) == odd);
    fs::remove(p);
}

TEST_CASE("cmx magic tags are checked") {
    const fs::path p = temp_file("magic.cmx");
    write_cmx(p, CMat::Identity(2, 2), magic::kCodes);
    CHECK_NOTHROW(read_cmx(p, magic::kCodes));
    CHECK_THROWS_AS(read_cmx(p, magic::kMatrix), IoError);
    fs::remove(p);
    CHECK_THROWS_AS(read_cmx(temp_file("does_not_exist.cmx")), IoError);
}

TEST_CASE("cmx rejects truncated payloads") {
    const fs::path p = temp_file("trunc.cmx");
    write_cmx(p, random_matrix(3, 3, 1));
    fs::resize_file(p, fs::file_size(p) - 10);
    CHECK_THROWS_AS(read_cmx(p), IoError);
    fs::remove(p);
}

TEST_CASE("matrix csv carries a labeled header and parsable values") {
    const fs::path p = temp_file("matrix.csv");
    CMat m(2, 2);
    m << Complex(1.5, -2.0), Complex(0.0, 0.25), Complex(-3.0, 0.0),
        Complex(0.1, 0.2);
    write_matrix_csv(p, m);
    std::ifstream in(p);
    std::string header, row0;
    std::getline(in, header);
    std::getline(in, row0);
    CHECK(header == "re_0,im_0,re_1,im_1");
    CHECK(row0 == "1.5,-2,0,0.25");
    fs::remove(p);
}

TEST_CASE("recording csv parses with and without a header") {
    const fs::path p = temp_file("recording.csv");
    {
        std::ofstream out(p);
        out << "ch_a,ch_b\n1.0,2.0\n3.5,-4.25\n\n0.5,0.125\n";
    }
    const RMat r = read_recording_csv(p);
    REQUIRE(r.rows() == 3);
    REQUIRE(r.cols() == 2);
    CHECK(r(1, 1) == -4.25);
    CHECK(r(2, 0) == 0.5);

    {
        std::ofstream out(p);
        out << "1,2\n3,4\n";  // headerless
    }
    CHECK(read_recording_csv(p).rows() == 2);
    fs::remove(p);
}

TEST_CASE("recording csv rejects malformed input") {
    const fs::path p = temp_file("bad_recording.csv");
    {
        std::ofstream out(p);
        out << "1,2\n3,4,5\n";  // inconsistent channel count
    }
    CHECK_THROWS_AS(read_recording_csv(p), IoError);
    {
        std::ofstream out(p);
        out << "1,2\nx,4\n";  // non-numeric data row (not a header)
    }
    CHECK_THROWS_AS(read_recording_csv(p), IoError);
    {
        std::ofstream out(p);
        out << "only,a,header\n";
    }
    CHECK_THROWS_AS(read_recording_csv(p), IoError);
    fs::remove(p);
    CHECK_THROWS_AS(read_recording_csv(temp_file("missing.csv")), IoError);
}

TEST_CASE("file hash is the reference fnv-1a") {
    const fs::path p = temp_file("hash.bin");
    {
        std::ofstream out(p, std::ios::binary);
        out << "abc";
    }
    // independently computed fnv-1a 64-bit digest of "abc"
    CHECK(file_content_hash(p) == 0xe71fa2190541574bULL);

    const fs::path q = temp_file("hash2.bin");
    fs::copy_file(p, q, fs::copy_options::overwrite_existing);
    CHECK(file_content_hash(p) == file_content_hash(q));
    {
        std::ofstream out(q, std::ios::binary);
        out << "abd";
    }
    CHECK(file_content_hash(p) != file_content_hash(q));
    fs::remove(p);
    fs::remove(q);
}

TEST_CASE("solver report json carries the scalar fields and optional trace") {
    SolverReport rep;
    rep.solution = CoefficientMatrix{CMat::Zero(3, 5), SymmetryMode::Matrix};
    rep.iterations = 42;
    rep.final_residual = 0.125;
    rep.final_objective = 1.75;
    rep.solution_rank = 2;
    rep.converged = true;
    rep.objective_trace = {3.0, 2.0, 1.75};

    const auto j = nlohmann::json::parse(solver_report_json(rep));
    CHECK(j["iterations"] == 42);
    CHECK(j["final_residual"] == 0.125);
    CHECK(j["final_objective"] == 1.75);
    CHECK(j["solution_rank"] == 2);
    CHECK(j["converged"] == true);
    CHECK(j["solution_rows"] == 3);
    CHECK(j["solution_cols"] == 5);
    CHECK(!j.contains("objective_trace"));

    const auto jt = nlohmann::json::parse(solver_report_json(rep, true));
    REQUIRE(jt["objective_trace"].size() == 3);
    CHECK(jt["objective_trace"][2] == 1.75);

    const fs::path p = temp_file("report.json");
    write_solver_report(p, rep);
    std::ifstream in(p);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    CHECK(nlohmann::json::parse(text)["iterations"] == 42);
    fs::remove(p);
}

TEST_CASE("format_double is shortest round-trippable") {
    for (double v : {0.1, -1.0 / 3.0, 1e-300, 3.141592653589793, 0.0, -2.5}) {
        const std::string s = format_double(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(-2.0) == "-2");
}
