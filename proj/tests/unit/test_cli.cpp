#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "svdecomp/cli.hpp"
#include "svdecomp/path_bundle.hpp"

using namespace svdecomp;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string log;
};

Result invoke(const std::vector<std::string>& args) {
    std::ostringstream out, log;
    const int code = cli::run(args, out, log);
    return {code, out.str(), log.str()};
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> v;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) v.push_back(l);
    return v;
}

fs::path temp_file(const std::string& name) { return fs::temp_directory_path() / ("svdecomp_cli_" + name); }

const std::vector<std::string> kSmall{"--paths", "400", "--steps", "20", "--threads", "1"};

std::vector<std::string> with_small(std::vector<std::string> args) {
    args.insert(args.end(), kSmall.begin(), kSmall.end());
    return args;
}

}  // namespace

TEST(Cli, HelpExitsZero) {
    const auto r = invoke({"--help"});
    EXPECT_EQ(r.code, cli::kExitOk);
    EXPECT_NE(r.out.find("decompose"), std::string::npos);
}

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(invoke({}).code, cli::kExitConfigError);
    EXPECT_EQ(invoke({"decompose", "--no-such-flag"}).code, cli::kExitConfigError);
    EXPECT_EQ(invoke(with_small({"decompose", "--model", "garch"})).code, cli::kExitConfigError);
    EXPECT_EQ(invoke(with_small({"decompose", "--method", "fourier"})).code, cli::kExitConfigError);
    EXPECT_EQ(invoke(with_small({"ivslope", "--variant", "other"})).code, cli::kExitConfigError);
    EXPECT_EQ(invoke(with_small({"decompose", "--sabr-form", "other", "--model", "sabr"})).code,
              cli::kExitConfigError);
}

TEST(Cli, FellerViolationExitsTwoAndNamesIt) {
    const auto r = invoke(with_small({"decompose", "--model", "heston", "--k", "1", "--theta", "0.04", "--nu", "0.5"}));
    EXPECT_EQ(r.code, cli::kExitConfigError);
    EXPECT_NE(r.log.find("Feller"), std::string::npos);
    EXPECT_TRUE(r.out.empty());
}

TEST(Cli, BlackScholesCorrectionsAreExactlyZero) {
    const auto r = invoke(with_small({"decompose", "--model", "bs", "--sigma", "0.2"}));
    ASSERT_EQ(r.code, cli::kExitOk) << r.log;
    const auto ls = lines(r.out);
    ASSERT_FALSE(ls.empty());
    EXPECT_EQ(ls.front(), "method,label,estimate,std_error");
    int corrections = 0;
    for (const auto& l : ls) {
        for (const char* label : {",drift_adjust,", ",vomma,", ",vanna,", ",dtf,"}) {
            if (l.find(label) != std::string::npos) {
                ++corrections;
                EXPECT_EQ(l.substr(l.find(label) + std::string(label).size()), "0,0") << l;
            }
        }
    }
    EXPECT_EQ(corrections, 3 + 2 + 4);
}

TEST(Cli, OutputIsDeterministicAndThreadInvariant) {
    const std::vector<std::string> base{"decompose", "--model", "sabr", "--beta", "0.8", "--rho", "-0.3",
                                        "--paths", "501", "--steps", "20"};
    auto one = base;
    one.insert(one.end(), {"--threads", "1"});
    auto three = base;
    three.insert(three.end(), {"--threads", "3"});
    const auto a = invoke(one);
    const auto b = invoke(one);
    const auto c = invoke(three);
    ASSERT_EQ(a.code, cli::kExitOk);
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(a.out, c.out);
}

TEST(Cli, ConfigFileSetsDefaultsAndFlagsOverride) {
    const auto path = temp_file("config.ini");
    {
        std::ofstream f(path);
        f << "model = sabr\nbeta = 0.8\nrho = -0.3\npaths = 300\nsteps = 10\nthreads = 1\n";
    }
    const auto r = invoke({"price", "--config", path.string(), "--paths", "200"});
    fs::remove(path);
    ASSERT_EQ(r.code, cli::kExitOk) << r.log;
    EXPECT_NE(r.log.find("model=sabr"), std::string::npos) << r.log;
    EXPECT_NE(r.log.find("paths=200 steps=10"), std::string::npos) << r.log;
}

TEST(Cli, PriceReportsCharacteristicFunctionForHeston) {
    const auto r = invoke(with_small({"price", "--model", "heston", "--rho", "-0.7", "--rate", "0.02"}));
    ASSERT_EQ(r.code, cli::kExitOk) << r.log;
    EXPECT_NE(r.out.find("cf_price,8.68601539879"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("mc_price,"), std::string::npos);
    EXPECT_NE(r.out.find("leading_bs_v0,"), std::string::npos);
}

TEST(Cli, OutAndDumpPathsWriteFiles) {
    const auto csv = temp_file("out.csv");
    const auto dump = temp_file("paths.bin");
    const auto r = invoke(with_small({"decompose", "--model", "heston", "--method", "ito", "--out", csv.string(),
                                      "--dump-paths", dump.string()}));
    ASSERT_EQ(r.code, cli::kExitOk) << r.log;
    EXPECT_TRUE(r.out.empty());
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "method,label,estimate,std_error");
    std::ifstream bin(dump, std::ios::binary);
    const auto bundle = read_path_bundle(bin);
    EXPECT_EQ(bundle.n_paths(), 400u);
    EXPECT_EQ(bundle.n_steps(), 20u);
    fs::remove(csv);
    fs::remove(dump);
}

TEST(Cli, UnwritableOutExitsTwo) {
    const auto r = invoke(with_small({"price", "--model", "bs", "--out", "/nonexistent-dir/x.csv"}));
    EXPECT_EQ(r.code, cli::kExitConfigError);
}

TEST(Cli, CheckPassesOnSabr) {
    const auto r = invoke({"check", "--model", "sabr", "--alpha", "0.5", "--beta", "0.8", "--rho", "-0.3",
                           "--sigma0", "0.2", "--paths", "20000", "--steps", "100", "--threads", "1"});
    EXPECT_EQ(r.code, cli::kExitOk) << r.log;
    EXPECT_EQ(r.log.find("FAIL"), std::string::npos) << r.log;
    EXPECT_NE(r.log.find("PASS functional_vs_ito.pathwise_rel"), std::string::npos);
}

TEST(Cli, IvSlopeCsv) {
    const auto r = invoke(with_small({"ivslope", "--model", "heston", "--rho", "-0.7", "--variant", "malliavin"}));
    ASSERT_EQ(r.code, cli::kExitOk) << r.log;
    const auto ls = lines(r.out);
    ASSERT_EQ(ls.size(), 15u);
    EXPECT_EQ(ls.front(), "quantity,estimate,std_error");
    EXPECT_EQ(ls[1].rfind("malliavin.s_star,", 0), 0u);
}
