#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "chartcons/constraints.hpp"
#include "chartcons/tree.hpp"

using namespace chartcons;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("chartcons_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

  std::string read(const std::string& name) const {
    std::ifstream in(path(name));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  /// Exit status of the CLI; stdout goes to out.txt, stderr to err.txt.
  int run(const std::string& args) const {
    const std::string cmd = std::string(CHARTCONS_CLI) + " " + args + " > " + path("out.txt") + " 2> " + path("err.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path dir_;
};

const char* kTrees =
    "(S (NP (DT the) (NN cat)) (VP (VBD sat) (PP (IN on) (NN mats))))\n"
    "(S (NP (PRP it)) (VP (VBD sat)))\n"
    "(S (NP (DT the) (NN dog)) (VP (VBD saw) (NP (DT the) (NN cat))))\n";

}  // namespace

TEST_F(Cli, ConstraintsGold) {
  write("t.ptb", kTrees);
  ASSERT_EQ(run("constraints gold --treebank " + path("t.ptb") + " --out " + path("c.tsv")), 0);
  auto recs = constraints_from_file(read("c.tsv"));
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(format_constraint_line(recs[0]), "1\t5\tB: 1\tE: 3 4");
  EXPECT_EQ(recs[1].constraints, BeginEndConstraints::none(2));
}

TEST_F(Cli, UsageAndDataErrors) {
  write("t.ptb", kTrees);
  EXPECT_EQ(run("parse pcfg --input " + path("t.ptb")), 1);
  EXPECT_NE(read("err.txt").find("--grammar"), std::string::npos);
  EXPECT_EQ(run("constraints gold --treebank " + path("t.ptb") + " --bogus"), 1);
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run("tagger predict --model m --input " + path("t.ptb") + " --theta 0.3"), 2);  // model missing
  EXPECT_EQ(run("constraints gold --treebank " + path("missing.ptb")), 2);
  write("bad.ptb", "(S (NP the cat)\n");
  EXPECT_EQ(run("constraints gold --treebank " + path("bad.ptb")), 2);
  write("bad.tsv", "1\t5\tB: 9\tE:\n");
  EXPECT_EQ(run("constraints eval --pred " + path("bad.tsv") + " --gold " + path("bad.tsv")), 2);
  EXPECT_NE(read("err.txt").find("line 1"), std::string::npos);
}

TEST_F(Cli, PcfgRoundTripAndConfig) {
  write("t.ptb", kTrees);
  ASSERT_EQ(run("treebank extract-pcfg --treebank " + path("t.ptb") + " --out " + path("g.pcfg")), 0);
  ASSERT_EQ(run("constraints gold --treebank " + path("t.ptb") + " --out " + path("c.tsv")), 0);
  ASSERT_EQ(run("parse pcfg --grammar " + path("g.pcfg") + " --input " + path("t.ptb") + " --constraints " +
                path("c.tsv") + " --out " + path("p.txt")),
            0);
  EXPECT_EQ(read("p.txt"), kTrees);
  ASSERT_EQ(run("eval parseval --gold " + path("t.ptb") + " --pred " + path("p.txt")), 0);
  EXPECT_NE(read("out.txt").find("\n3\t3\t100.00\t100.00\t100.00\t100.00"), std::string::npos);
  // Theta outside [0.5, 1) from a config file is a usage error.
  ASSERT_EQ(run("tagger train --treebank " + path("t.ptb") + " --model logistic --out " + path("m.json")), 0);
  write("cfg.toml", "[tagger.predict]\ntheta = 0.2\n");
  EXPECT_EQ(run("--config " + path("cfg.toml") + " tagger predict --model " + path("m.json") + " --input " +
                path("t.ptb")),
            1);
  write("cfg.toml", "[tagger.predict]\ntheta = 0.9\n");
  EXPECT_EQ(run("--config " + path("cfg.toml") + " tagger predict --model " + path("m.json") + " --input " +
                path("t.ptb")),
            0);
  EXPECT_EQ(constraints_from_file(read("out.txt")).size(), 3u);
}

TEST_F(Cli, SeedMakesRunsRepeatable) {
  ASSERT_EQ(run("--seed 5 treebank generate --count 30 --out " + path("a.ptb")), 0);
  ASSERT_EQ(run("treebank generate --seed 5 --count 30 --out " + path("b.ptb")), 0);
  ASSERT_EQ(run("--seed 6 treebank generate --count 30 --out " + path("c.ptb")), 0);
  EXPECT_EQ(read("a.ptb"), read("b.ptb"));
  EXPECT_NE(read("a.ptb"), read("c.ptb"));
  EXPECT_EQ(read_ptb(read("a.ptb")).size(), 30u);
  const std::string train = "tagger train --treebank " + path("a.ptb") +
                            " --model lstm --epochs 1 --hidden 4 --layers 1 --word-dim 4 --pos-dim 2 --out ";
  ASSERT_EQ(run(train + path("m1.json")), 0);
  ASSERT_EQ(run(train + path("m2.json")), 0);
  EXPECT_EQ(read("m1.json"), read("m2.json"));
}

TEST_F(Cli, TagPipeline) {
  ASSERT_EQ(run("treebank generate --count 60 --out " + path("a.ptb")), 0);
  ASSERT_EQ(run("treebank extract-tag --treebank " + path("a.ptb") + " --head-rules " CHARTCONS_DATA_DIR
                "/head_rules.tsv --grammar-out " + path("g.tag") + " --corpus-out " + path("c.tag")),
            0);
  ASSERT_EQ(run("supertag train --corpus " + path("c.tag") + " --grammar " + path("g.tag") + " --out " + path("s.json")),
            0);
  ASSERT_EQ(run("supertag predict --model " + path("s.json") + " --input " + path("c.tag") + " --k 2"), 0);
  EXPECT_EQ(split(read("out.txt"), '\n').size(), 61u);
  ASSERT_EQ(run("parse tag --supertag-model " + path("s.json") + " --k 3 --gold-constraints --input " + path("c.tag") +
                " --out " + path("p.txt")),
            0);
  ASSERT_EQ(run("bench tag --grammar " + path("g.tag") + " --corpus " + path("c.tag") +
                " --run none=none --run cc=cc:gold --repeats 1 --warmup 0 --sentences-out " + path("rows.tsv")),
            0);
  EXPECT_NE(read("out.txt").find("\ncc\tnone\t60\t"), std::string::npos);
  EXPECT_EQ(run("bench tag --grammar " + path("g.tag") + " --corpus " + path("c.tag") + " --run none=none --baseline x"),
            1);
  EXPECT_EQ(run("parse tag --input " + path("c.tag")), 1);
}

TEST_F(Cli, SampleGrammarOnWords) {
  write("s.txt", "kim saw the dog in the park\nthe cat often slept\n");
  ASSERT_EQ(run("parse tag --grammar " CHARTCONS_DATA_DIR "/sample.tag --tokens words --input-format tokens --input " +
                path("s.txt")),
            0);
  auto lines = split(read("out.txt"), '\n');
  ASSERT_GE(lines.size(), 2u);
  EXPECT_EQ(leaves(read_ptb(lines[1]).at(0)), (std::vector<std::string>{"the", "cat", "often", "slept"}));
}
