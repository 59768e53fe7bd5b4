#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "cli.hpp"
#include "test_support.hpp"

namespace pickbody {
namespace {

using cli::Json;
namespace fs = std::filesystem;

struct CliRun {
    int code = -1;
    std::string out;
    std::string err;
    Json report() const { return Json::parse(out); }
};

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("pickbody_cli_" + std::to_string(::getpid()) + "_" +
                                            ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string write(const std::string& name, const std::string& text) {
        const auto path = dir_ / name;
        std::ofstream(path) << text;
        return path.string();
    }
    std::string write(const std::string& name, const Json& j) { return write(name, j.dump()); }

    CliRun invoke(std::vector<std::string> args) {
        args.insert(args.begin(), "pickbody");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        CliRun r;
        r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
        r.out = out.str();
        r.err = err.str();
        return r;
    }

    fs::path dir_;
};

Json disc_points(std::initializer_list<Complex> z) {
    Json a = Json::array();
    for (auto x : z) a.push_back(cli::to_json(x));
    return a;
}

Json strip_timing(Json j) {
    j.erase("timing");
    return j;
}

TEST_F(CliTest, SolveUniqueDegreeOne) {
    const Json p{{"domain", {{"kind", "disc"}}}, {"points", disc_points({0.0, 0.5})}, {"targets", disc_points({0.0, 0.5})}};
    const auto r = invoke({"solve", "--in", write("p.json", p)});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rep = r.report();
    EXPECT_EQ(rep["verdict"], "Unique");
    EXPECT_EQ(rep["result"]["blaschke"]["degree"], 1);
    EXPECT_LE(rep["result"]["blaschke"]["interpolation_residual"].get<double>(), 1e-12);
}

TEST_F(CliTest, SolveTwoPointViolationIsNone) {
    // m(0, 0.9) = 0.9 exceeds m(0, 0.5) = 0.5.
    const Json p{{"points", disc_points({0.0, 0.5})}, {"targets", disc_points({0.0, 0.9})}};
    const auto r = invoke({"solve", "--in", write("p.json", p)});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(r.report()["verdict"], "None");
    EXPECT_LT(r.report()["result"]["pick_min_eigenvalue"].get<double>(), 0.0);
}

TEST_F(CliTest, InputErrorsExitTwo) {
    EXPECT_EQ(invoke({"solve", "--in", write("a.json", std::string("{\"points\": ["))}).code, 2);
    EXPECT_EQ(invoke({"solve", "--in", (dir_ / "missing.json").string()}).code, 2);
    const Json no_im{{"points", Json::array({{{"re", 0.0}}})}, {"targets", disc_points({0.0})}};
    EXPECT_EQ(invoke({"solve", "--in", write("b.json", no_im)}).code, 2);
    const Json unknown{{"points", disc_points({0.0})}, {"targetz", disc_points({0.0})}};
    EXPECT_EQ(invoke({"solve", "--in", write("c.json", unknown)}).code, 2);
    const Json outside{{"points", disc_points({0.0, 1.2})}, {"targets", disc_points({0.0, 0.1})}};
    EXPECT_EQ(invoke({"solve", "--in", write("d.json", outside)}).code, 2);
    const Json repeated{{"points", disc_points({0.3, 0.3})}, {"targets", disc_points({0.0, 0.1})}};
    EXPECT_EQ(invoke({"solve", "--in", write("e.json", repeated)}).code, 2);
    Json asym{{"kernel", cli::to_json(ComplexMatrix::Identity(2, 2))}, {"targets", disc_points({0.0, 0.0})}};
    asym["kernel"][0][1] = cli::to_json(Complex(0.5, 0.0));
    EXPECT_EQ(invoke({"member", "--in", write("f.json", asym)}).code, 2);
    EXPECT_EQ(invoke({"frobnicate", "--in", write("g.json", std::string("{}"))}).code, 2);
    EXPECT_EQ(invoke({"verify", "--in", write("h.json", std::string("{}"))}).code, 2);
}

TEST_F(CliTest, MemberOnSzegoKernel) {
    const std::vector<Complex> z{0.0, 0.5};
    const Json p{{"kernel", cli::to_json(szego_raw(z).matrix())}, {"targets", disc_points({0.0, 0.3})}};
    const auto r = invoke({"member", "--in", write("p.json", p)});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.report()["verdict"], "Member");

    // m(0, 0.6) = 0.6 > 0.5: outside the Pick body, hence outside the Szego ball.
    const Json q{{"kernel", cli::to_json(szego_raw(z).matrix())}, {"targets", disc_points({0.0, 0.6})}};
    const auto s = invoke({"member", "--in", write("q.json", q)});
    EXPECT_EQ(s.code, 1);
    EXPECT_EQ(s.report()["verdict"], "NonMember");
}

TEST_F(CliTest, DomainMembershipOnBidisc) {
    // f(z) = z1 z2 takes these values, so the tuple is a member.
    const std::vector<DomainPoint> z{{0.5, 0.4}, {Complex(0.0, 0.3), -0.5}};
    Json pts = Json::array();
    for (const auto& p : z) pts.push_back(cli::to_json(p));
    const Json p{{"domain", {{"kind", "polydisc"}, {"dim", 2}}},
                 {"points", pts},
                 {"targets", disc_points({z[0][0] * z[0][1], z[1][0] * z[1][1]})}};
    const auto r = invoke({"member", "--in", write("p.json", p)});
    EXPECT_EQ(r.code, 0) << r.err;
}

TEST_F(CliTest, ExtremalDiagonalKernel) {
    const Json p{{"kernel", cli::to_json(ComplexMatrix::Identity(3, 3))}};
    const auto r = invoke({"extremal", "--in", write("p.json", p), "--samples", "20"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.report()["result"]["extremal"].get<bool>());
    EXPECT_EQ(r.report()["result"]["checked_tuples"], 6);
}

TEST_F(CliTest, RecognizeRoundTrip) {
    testing::Rng rng(31);
    const auto alpha = testing::random_separated_points(rng, 4, 0.85, 0.1);
    const std::vector<double> theta{0.0, 0.7, -1.3, 2.2};
    const Json p{{"kernel", cli::to_json(szego_kernel(alpha, theta).matrix())}};
    const auto r = invoke({"recognize", "--in", write("p.json", p)});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rep = r.report();
    ASSERT_TRUE(rep["result"]["recognized"].get<bool>());
    std::vector<Complex> got;
    for (const auto& a : rep["result"]["alpha"]) got.push_back(cli::parse_complex(a, "alpha"));
    ASSERT_EQ(got.size(), alpha.size());
    EXPECT_EQ(got[0], Complex(0.0, 0.0));
    EXPECT_NEAR(got[1].imag(), 0.0, 1e-15);
    for (std::size_t i = 0; i < alpha.size(); ++i)
        for (std::size_t j = i + 1; j < alpha.size(); ++j)
            EXPECT_NEAR(moebius_distance(got[i], got[j]), moebius_distance(alpha[i], alpha[j]), 1e-8);
}

TEST_F(CliTest, RecognizeRejectsDiagonal) {
    const Json p{{"kernel", cli::to_json(ComplexMatrix::Identity(3, 3))}};
    EXPECT_EQ(invoke({"recognize", "--in", write("p.json", p)}).code, 1);
}

TEST_F(CliTest, ReportsAreDeterministicAndRecordTheSeed) {
    const Json p{{"kernel", cli::to_json(szego_kernel(std::vector<Complex>{0.0, 0.4, Complex(0.1, -0.5)}).matrix())},
                 {"seed", 11}};
    const auto path = write("p.json", p);
    const auto a = invoke({"extremal", "--in", path, "--samples", "10"});
    const auto b = invoke({"extremal", "--in", path, "--samples", "10"});
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(strip_timing(a.report()).dump(), strip_timing(b.report()).dump());
    EXPECT_EQ(a.report()["seed"], 11);
    EXPECT_EQ(invoke({"extremal", "--in", path, "--samples", "10", "--seed", "5"}).report()["seed"], 5);
    EXPECT_EQ(invoke({"distance", "--in", write("q.json", Json{{"points", disc_points({0.0, 0.5})}})}).report()["seed"], 0);
}

TEST_F(CliTest, ReportRoundTripsThroughParsing) {
    const Json p{{"id", "rt"}, {"points", disc_points({0.0, 0.5, Complex(0.0, 0.5)})}};
    const auto r = invoke({"distance", "--in", write("p.json", p)});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rep = r.report();
    EXPECT_EQ(Json::parse(rep.dump()), rep);
    EXPECT_EQ(rep["input"], p);
    EXPECT_EQ(rep["instance_id"], "rt");
    EXPECT_EQ(rep["tool"], "pickbody");
    // Blaschke modulus at 0 of the factors vanishing at 1/2 and i/2.
    EXPECT_NEAR(rep["result"]["value"].get<double>(), 0.25, 1e-15);
    for (const auto& v : rep["verdicts"]) EXPECT_TRUE(v["residual"].is_number());
}

TEST_F(CliTest, CsvHasOneRowPerVerdict) {
    const Json p{{"points", disc_points({0.0, 0.5, Complex(-0.2, 0.3)})},
                 {"alpha", disc_points({0.0, 0.5, Complex(-0.2, 0.3)})}};
    const auto r = invoke({"verify", "--theorem", "2", "--in", write("p.json", p), "--format", "csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream is(r.out);
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "command,instance-id,verdict,residual,seed");
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        ++rows;
        EXPECT_EQ(line.rfind("verify,", 0), 0u) << line;
    }
    const auto j = invoke({"verify", "--theorem", "2", "--in", write("p.json", p)}).report();
    EXPECT_EQ(rows, j["verdicts"].size());
}

TEST_F(CliTest, HypothesisFailureIsSkippedWithExitThree) {
    // alpha = z/2 is interior to the kernel ball, so the boundary hypothesis fails.
    const Json p{{"points", disc_points({0.0, 0.5, Complex(-0.2, 0.3)})},
                 {"alpha", disc_points({0.0, 0.25, Complex(-0.1, 0.15)})}};
    const auto r = invoke({"verify", "--theorem", "2", "--in", write("p.json", p)});
    EXPECT_EQ(r.code, 3);
    EXPECT_EQ(r.report()["verdict"], "Skipped");
}

TEST_F(CliTest, OutFileReceivesReport) {
    const Json p{{"points", disc_points({0.0, 0.5})}, {"targets", disc_points({0.0, 0.5})}};
    const auto out = (dir_ / "report.json").string();
    const auto r = invoke({"solve", "--in", write("p.json", p), "--out", out});
    EXPECT_EQ(r.code, 0);
    EXPECT_TRUE(r.out.empty());
    std::ifstream f(out);
    const auto rep = Json::parse(f);
    EXPECT_EQ(rep["command"], "solve");
}

TEST_F(CliTest, ExecutableExitCodes) {
    const char* exe = std::getenv("PICKBODY_EXE");
#ifdef PICKBODY_EXE_PATH
    if (exe == nullptr) exe = PICKBODY_EXE_PATH;
#endif
    if (exe == nullptr) GTEST_SKIP() << "pickbody executable not configured";
    auto status = [&](const std::string& args) {
        const std::string cmd = std::string(exe) + " " + args + " > /dev/null 2>&1";
        const int s = std::system(cmd.c_str());
        return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
    };
    const Json ok{{"points", disc_points({0.0, 0.5})}, {"targets", disc_points({0.0, 0.5})}};
    const Json none{{"points", disc_points({0.0, 0.5})}, {"targets", disc_points({0.0, 0.9})}};
    EXPECT_EQ(status("solve --in " + write("ok.json", ok)), 0);
    EXPECT_EQ(status("solve --in " + write("none.json", none)), 1);
    EXPECT_EQ(status("solve --in " + write("bad.json", std::string("not json"))), 2);
    EXPECT_EQ(status("solve"), 2);
}

} // namespace
} // namespace pickbody
