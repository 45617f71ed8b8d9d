#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "test_data.hpp"

namespace nhl {
namespace {

namespace fs = std::filesystem;
using testing::data_path;
using testing::slurp;

struct Outcome {
  int status = -1;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("nhl-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }

  Outcome run(const std::string& args, const std::string& input = "") {
    std::string in = write("stdin.txt", input);
    std::string err = (dir_ / "stderr.txt").string();
    std::string cmd = std::string(NHL_CLI_PATH) + " " + args + " < " + in + " 2> " + err;
    Outcome r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    std::array<char, 4096> buf;
    size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    int st = pclose(p);
    r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    r.err = slurp(err);
    return r;
  }

  static std::string example(const std::string& name) {
    std::string d = data_path("examples/" + name) + "/";
    std::string args = "verify --spec " + d + "spec.txt --program " + d + "program.imp --relation " + d +
                       "relation.txt";
    if (fs::exists(d + "kb.txt")) args += " --kb " + d + "kb.txt";
    return args;
  }

  fs::path dir_;
};

TEST_F(Cli, ValidExampleReport) {
  Outcome r = run(example("invariant"));
  EXPECT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out, "invariant\tmain\tValid\t\n");
}

TEST_F(Cli, EveryShippedExampleHasItsExitStatus) {
  const std::pair<const char*, int> expected[] = {
      {"invariant", 0},   {"imperative", 0}, {"value", 0}, {"kb", 0},        {"conditional", 0},
      {"prepost", 0},     {"loop", 0},       {"refute", 1}, {"ambiguous", 3},
  };
  for (const auto& [name, code] : expected) {
    Outcome r = run(example(name));
    EXPECT_EQ(r.status, code) << name << "\n" << r.out << r.err;
  }
}

TEST_F(Cli, InvalidReportCarriesTheModel) {
  Outcome r = run(example("refute"));
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.out, "invariant\tmain\tInvalid\t_balance=1\n");
}

TEST_F(Cli, LoopReportListsEveryVc) {
  Outcome r = run(example("loop"));
  EXPECT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out,
            "summation\tmain\tValid\t\n"
            "summation\tloop-preservation(1)\tValid\t\n"
            "summation\tloop-exit(1)\tValid\t\n");
}

TEST_F(Cli, UnnamedLinesAreNumbered) {
  std::string d = data_path("examples/invariant") + "/";
  std::string spec = write("spec.txt", "# comment\n\nAll balances must be greater than zero.\n");
  Outcome r = run("verify --spec " + spec + " --program " + d + "program.imp --relation " + d + "relation.txt");
  EXPECT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out, "line3\tmain\tValid\t\n");
}

TEST_F(Cli, UnknownWordIsAnInputError) {
  std::string d = data_path("examples/invariant") + "/";
  std::string spec = write("spec.txt", "All balances must be purple.\n");
  Outcome r = run("verify --spec " + spec + " --program " + d + "program.imp --relation " + d + "relation.txt");
  EXPECT_EQ(r.status, 3);
  EXPECT_EQ(r.out, "");
  EXPECT_NE(r.err.find("no parse"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("purple"), std::string::npos) << r.err;
}

TEST_F(Cli, TiedReadingsNeedInteraction) {
  Outcome r = run(example("ambiguous"));
  EXPECT_EQ(r.status, 3);
  EXPECT_NE(r.err.find("amount: ambiguous; rerun interactive"), std::string::npos) << r.err;
}

TEST_F(Cli, ConfirmingTheFirstReadingMatchesTheBatchRun) {
  Outcome batch = run(example("invariant"));
  Outcome confirmed = run(example("invariant") + " --interactive", "y\n");
  EXPECT_EQ(confirmed.status, batch.status);
  EXPECT_EQ(confirmed.out, batch.out);
  EXPECT_EQ(confirmed.err, "Did you mean: all balances must be greater than zero? [y/n]\n");
}

TEST_F(Cli, ChoosingAmongTiedReadings) {
  Outcome r = run(example("ambiguous") + " --interactive", "y\n");
  EXPECT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out, "amount\tmain\tValid\t\n");
  EXPECT_EQ(r.err.find("Did you mean: "), 0u) << r.err;
}

TEST_F(Cli, RejectingEveryReadingAsksToRephrase) {
  Outcome r = run(example("invariant") + " --interactive", "n\nn\nn\nn\nn\n");
  EXPECT_EQ(r.status, 2);
  EXPECT_EQ(r.out, "");
  EXPECT_NE(r.err.find("please rephrase"), std::string::npos) << r.err;
}

TEST_F(Cli, BadOptionsAreInputErrors) {
  EXPECT_EQ(run(example("invariant") + " --k 0").status, 3);
  EXPECT_EQ(run(example("invariant") + " --bound 0").status, 3);
  EXPECT_EQ(run("verify --spec /nonexistent/spec.txt").status, 3);
  EXPECT_EQ(run("frobnicate").status, 3);
  EXPECT_EQ(run("").status, 3);
}

TEST_F(Cli, MissingLoopInvariantIsAnInputError) {
  std::string d = data_path("examples/loop") + "/";
  std::string prog = write("p.imp", "while _n > 0 do _s := _s + _n; _n := _n - 1 od\n");
  Outcome r = run("verify --spec " + d + "spec.txt --program " + prog + " --relation " + d + "relation.txt");
  EXPECT_EQ(r.status, 3);
  EXPECT_NE(r.err.find("invariant"), std::string::npos) << r.err;
}

TEST_F(Cli, EmitsOneSmtFilePerVc) {
  fs::path smt = dir_ / "smt";
  Outcome r = run(example("loop") + " --emit-smt " + smt.string());
  EXPECT_EQ(r.status, 0) << r.err;
  for (int i = 1; i <= 3; ++i) {
    fs::path f = smt / ("summation-" + std::to_string(i) + ".smt2");
    ASSERT_TRUE(fs::exists(f)) << f;
    std::string text = slurp(f.string());
    EXPECT_NE(text.find("(check-sat)"), std::string::npos);
  }
  EXPECT_FALSE(fs::exists(smt / "summation-4.smt2"));
}

TEST_F(Cli, ProofRecordsTransferThroughTheKnowledgeBase) {
  std::string record = (dir_ / "value.record").string();
  Outcome first = run(example("value") + " --record-out " + record);
  ASSERT_EQ(first.status, 0) << first.err;
  ASSERT_TRUE(fs::exists(record));
  Outcome second = run(example("kb") + " --record-in " + record);
  EXPECT_EQ(second.status, 0) << second.err;
  EXPECT_EQ(second.out, "balance-invariant\tmain\tValid\ttransferred from: "
                        "value-invariant: All values must be greater than zero.\n");

  std::string d = data_path("examples/kb") + "/";
  std::string other = write("p.imp", "_balance := _balance + 2\n");
  Outcome mismatch = run("verify --spec " + d + "spec.txt --program " + other + " --relation " + d +
                     "relation.txt --kb " + d + "kb.txt --record-in " + record);
  EXPECT_EQ(mismatch.status, 3);
  EXPECT_NE(mismatch.err.find("different program"), std::string::npos) << mismatch.err;
}

TEST_F(Cli, ParsePrintsRankedReadings) {
  Outcome r = run("parse 'Increment the balance.'");
  EXPECT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out, "0\timperative\tforall x. balance(post(x)) = balance(x) + 1\n");
  Outcome amb = run("parse 'The amount must be positive.'");
  EXPECT_EQ(amb.status, 0);
  EXPECT_GE(std::count(amb.out.begin(), amb.out.end(), '\n'), 2);
  EXPECT_EQ(run("parse 'Frobnicate the balance.'").status, 3);
}

TEST_F(Cli, ParaphraseRendersLogicalForms) {
  Outcome r = run("paraphrase 'forall x. balance(x) > 0'");
  EXPECT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out, "all balances must be greater than zero\n");
  EXPECT_EQ(run("paraphrase 'forall x. balance(x) > balance(post(x))'").status, 3);
}

TEST_F(Cli, WpPrintsInvariantsAndSideConditions) {
  Outcome r = run("wp --program " + data_path("examples/loop/program.imp") + " --post '_s >= 0'");
  EXPECT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out,
            "wp\t_s >= 0\n"
            "invariant\t1\t_s >= 0\n"
            "vc\tloop-preservation(1)\t_s >= 0 && _n > 0 => _s + _n >= 0\n"
            "vc\tloop-exit(1)\t_s >= 0 && !(_n > 0) => _s >= 0\n");
  std::string bad = write("bad.imp", "_a := ;\n");
  EXPECT_EQ(run("wp --program " + bad + " --post '_a > 0'").status, 3);
}

}  // namespace
}  // namespace nhl
