#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>
#include <sys/wait.h>

#include "support.hpp"

namespace {

struct CliRun {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Runs the CLI with `args` (already shell-quoted where needed).
CliRun ihdr_cli(const ihdr::test::TempDir& dir, const std::string& args) {
    const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
    const std::string cmd = std::string("\"") + IHDR_CLI_PATH + "\" " + args + " > \"" + out.string() + "\" 2> \"" +
                            err.string() + "\"";
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST(Cli, HelpListsEverySubcommand) {
    const ihdr::test::TempDir dir("cli");
    const CliRun r = ihdr_cli(dir, "--help");
    EXPECT_EQ(r.code, 0);
    for (const char* sub : {"simulate", "sideinfo", "fuse", "tonemap", "train", "eval", "macs"})
        EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
}

TEST(Cli, VersionNamesCheckpointFormat) {
    const ihdr::test::TempDir dir("cli");
    const CliRun r = ihdr_cli(dir, "--version");
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("checkpoint format 1"), std::string::npos);
}

TEST(Cli, UsageErrorsExitWithTwo) {
    const ihdr::test::TempDir dir("cli");
    CliRun r = ihdr_cli(dir, "fuse --bogus-flag");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("error: usage"), std::string::npos);
    r = ihdr_cli(dir, "nosuchcommand");
    EXPECT_EQ(r.code, 2);
    r = ihdr_cli(dir, "simulate --synthetic 32x32 --evs 0 --out " + q(dir / "b"));
    EXPECT_EQ(r.code, 2) << r.err;
}

TEST(Cli, DataErrorsExitWithThree) {
    const ihdr::test::TempDir dir("cli");
    CliRun r = ihdr_cli(dir, "fuse --manifest " + q(dir / "missing.json") + " --out " + q(dir / "o.pfm"));
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("error: data"), std::string::npos);
    std::ofstream(dir / "bad.pfm") << "not a pfm";
    r = ihdr_cli(dir, "eval --pred " + q(dir / "bad.pfm") + " --gt " + q(dir / "bad.pfm"));
    EXPECT_EQ(r.code, 3);
}

TEST(Cli, SimulateFuseEvalRoundTrip) {
    const ihdr::test::TempDir dir("cli");
    const auto b = dir / "bracket";
    CliRun r = ihdr_cli(dir, "--seed 3 simulate --synthetic 32x32 --evs -1..1 --model simplified --out " + q(b));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.err.find("config:"), std::string::npos);
    ASSERT_TRUE(std::filesystem::exists(b / "manifest.json"));
    ASSERT_TRUE(std::filesystem::exists(b / "ground_truth.pfm"));

    r = ihdr_cli(dir, "fuse --manifest " + q(b / "manifest.json") + " --out " + q(dir / "fused.pfm") +
                          " --dump-intermediates " + q(dir / "steps"));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(std::filesystem::exists(dir / "steps" / "step_0_mapped.png"));

    r = ihdr_cli(dir, "eval --pred " + q(dir / "fused.pfm") + " --gt " + q(b / "ground_truth.pfm") + " --json " +
                          q(dir / "m.json"));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(slurp(dir / "m.json"));
    for (const char* key : {"psnr_l", "psnr_mu", "ssim_l", "ssim_mu"}) EXPECT_TRUE(j.contains(key)) << key;

    r = ihdr_cli(dir, "tonemap --in " + q(dir / "fused.pfm") + " --out " + q(dir / "t.png"));
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(std::filesystem::exists(dir / "t.png"));
}

TEST(Cli, IdenticalInputsReportInfinity) {
    const ihdr::test::TempDir dir("cli");
    const auto b = dir / "bracket";
    ASSERT_EQ(ihdr_cli(dir, "simulate --synthetic 16x16 --evs 0,-2 --out " + q(b)).code, 0);
    const auto gt = q(b / "ground_truth.pfm");
    ASSERT_EQ(ihdr_cli(dir, "eval --pred " + gt + " --gt " + gt + " --json " + q(dir / "m.json")).code, 0);
    const auto j = nlohmann::json::parse(slurp(dir / "m.json"));
    EXPECT_EQ(j["psnr_l"], "inf");
    EXPECT_EQ(j["psnr_mu"], "inf");
}

TEST(Cli, SameSeedIsByteIdentical) {
    const ihdr::test::TempDir dir("cli");
    for (const char* name : {"a", "b"})
        ASSERT_EQ(ihdr_cli(dir, "simulate --synthetic 24x24 --evs -1..1 --motion 2 --out " + q(dir / name) +
                                    " --seed 7 --threads 1")
                      .code,
                  0);
    for (const auto& entry : std::filesystem::directory_iterator(dir / "a")) {
        const auto name = entry.path().filename();
        EXPECT_EQ(slurp(entry.path()), slurp(dir / "b" / name)) << name;
    }
}

TEST(Cli, TrainWritesLoadableCheckpoint) {
    const ihdr::test::TempDir dir("cli");
    CliRun r = ihdr_cli(dir, "train --data synthetic --samples 1 --steps 2 --patch 16 --channels 4,8 --out " +
                              q(dir / "m.ckpt") + " --history " + q(dir / "h.json"));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(nlohmann::json::parse(slurp(dir / "h.json"))["loss"].size(), 2u);
    r = ihdr_cli(dir, "macs --model " + q(dir / "m.ckpt") + " --size 32x32 --json " + q(dir / "macs.json"));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_GT(nlohmann::json::parse(slurp(dir / "macs.json"))["total"].get<std::uint64_t>(), 0u);
}
