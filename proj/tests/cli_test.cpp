#include "noktalama/cli.hpp"

#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "noktalama/corpus.hpp"
#include "support/oracles.hpp"
#include "support/test_corpus.hpp"

namespace noktalama {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args, const std::string& input = "") {
  args.insert(args.begin(), "noktalama");
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = cli::run(args, in, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("noktalama_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    write_vocab(testing::corpus_vocab(), "vocab.txt");
    write_vocab(testing::sample_vocab(), "sample_vocab.txt");
  }
  void TearDown() override { fs::remove_all(dir_); }

  void write_vocab(const Vocab& v, const std::string& name) {
    std::ofstream f(dir_ / name, std::ios::binary);
    for (std::size_t i = 0; i < v.size(); ++i) f << v.token(static_cast<TokenId>(i)) << '\n';
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  /// Writes `n` generated documents as JSONL; returns their texts.
  std::vector<std::string> write_corpus(const std::string& name, int n, std::uint64_t seed) {
    testing::CorpusGenerator gen(seed);
    std::ofstream f(dir_ / name, std::ios::binary);
    std::vector<std::string> texts;
    for (int i = 0; i < n; ++i) {
      texts.push_back(i % 3 ? gen.paragraph() : gen.noisy_paragraph());
      std::string escaped;
      for (char c : texts.back()) {
        if (c == '"' || c == '\\') escaped += '\\';
        if (c == '\n') { escaped += "\\n"; continue; }
        if (c == '\t') { escaped += "\\t"; continue; }
        escaped += c;
      }
      f << "{\"title\":\"t\",\"content\":\"" << escaped << "\"}\n";
    }
    return texts;
  }

  fs::path dir_;
};

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run_cli({}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"prepare", "--bogus"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"--help"}).code, cli::kExitOk);
}

TEST_F(CliTest, PrepareSplitsAndIsReproducible) {
  write_corpus("corpus.jsonl", 10, 1);
  const auto r = run_cli({"prepare", "--vocab", path("vocab.txt"), "--input", path("corpus.jsonl"),
                          "--output", path("out1")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("docs: 7/2/1 (train/test/validation)"), std::string::npos) << r.out;
  const auto again = run_cli({"prepare", "--vocab", path("vocab.txt"), "--input",
                              path("corpus.jsonl"), "--output", path("out2"), "--workers", "3"});
  ASSERT_EQ(again.code, 0) << again.err;
  for (const char* split : {"train.jsonl", "test.jsonl", "validation.jsonl"}) {
    const auto a = slurp(dir_ / "out1" / split);
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(dir_ / "out2" / split)) << split;
  }
}

TEST_F(CliTest, PrepareMissingColumn) {
  write_corpus("corpus.jsonl", 3, 2);
  const auto r = run_cli({"prepare", "--vocab", path("vocab.txt"), "--input", path("corpus.jsonl"),
                          "--output", path("out"), "--column", "body"});
  EXPECT_EQ(r.code, cli::kExitFailure);
  EXPECT_NE(r.err.find("body"), std::string::npos) << r.err;
  EXPECT_TRUE(r.out.empty());
}

TEST_F(CliTest, MissingVocabFile) {
  write_corpus("corpus.jsonl", 3, 2);
  const auto r = run_cli({"stats", "--vocab", path("nope.txt"), "--input", path("corpus.jsonl")});
  EXPECT_EQ(r.code, cli::kExitFailure);
}

TEST_F(CliTest, InvalidConfigNamesField) {
  {
    std::ofstream f(dir_ / "bad.conf");
    f << "# comment\nmax_len = lots\n";
  }
  const auto r = run_cli({"stats", "--config", path("bad.conf"), "--input", path("x.jsonl")});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("max_len"), std::string::npos) << r.err;
  const auto frac = run_cli({"stats", "--vocab", path("vocab.txt"), "--input", path("x.jsonl"),
                             "--train-frac", "0.9"});
  EXPECT_EQ(frac.code, cli::kExitUsage);
  EXPECT_NE(frac.err.find("frac"), std::string::npos) << frac.err;
}

TEST_F(CliTest, ConfigFileAndFlagPrecedence) {
  write_corpus("corpus.jsonl", 10, 3);
  {
    std::ofstream f(dir_ / "run.conf");
    f << "vocab = " << path("vocab.txt") << "\ntrain_frac = 0.5\ntest_frac = 0.3\nvalid_frac = 0.2\n";
  }
  const auto r = run_cli({"prepare", "--config", path("run.conf"), "--input", path("corpus.jsonl"),
                          "--output", path("out")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("docs: 5/3/2"), std::string::npos) << r.out;
  const auto flag = run_cli({"prepare", "--config", path("run.conf"), "--input",
                             path("corpus.jsonl"), "--output", path("out"), "--train-frac", "0.6",
                             "--test-frac", "0.2"});
  ASSERT_EQ(flag.code, 0) << flag.err;
  EXPECT_NE(flag.out.find("docs: 6/2/2"), std::string::npos) << flag.out;
}

TEST_F(CliTest, CorrectSampleSentence) {
  {
    std::ofstream f(dir_ / "gold.jsonl");
    f << "{\"content\":\"Türkiye'nin her tarafında devam etmektedir.\"}\n";
  }
  const std::vector<std::string> common = {"--vocab", path("sample_vocab.txt")};
  auto args = common;
  for (auto a : {"--input", "gold.jsonl", "--output", "prep", "--train-frac", "1", "--test-frac",
                 "0", "--valid-frac", "0"}) {
    args.push_back(std::string(a) == "gold.jsonl" || std::string(a) == "prep" ? path(a) : a);
  }
  args.insert(args.begin(), "prepare");
  ASSERT_EQ(run_cli(args).code, 0);
  const auto train = run_cli({"train-baseline", "--vocab", path("sample_vocab.txt"), "--input",
                              path("prep/train.jsonl"), "--model-path", path("model.json")});
  ASSERT_EQ(train.code, 0) << train.err;

  const auto r = run_cli({"correct", "--vocab", path("sample_vocab.txt"), "--model-path",
                          path("model.json"), "türkiyenin her tarafında devam etmektedir"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "Türkiye'nin her tarafında devam etmektedir.");

  const auto piped = run_cli({"correct", "--vocab", path("sample_vocab.txt"), "--model-path",
                              path("model.json")},
                             "türkiyenin her tarafında devam etmektedir\n");
  EXPECT_EQ(piped.out, "Türkiye'nin her tarafında devam etmektedir.\n");

  const auto empty = run_cli({"correct", "--vocab", path("sample_vocab.txt"), "--model-path",
                              path("model.json")},
                             "");
  EXPECT_EQ(empty.code, 0);
  EXPECT_TRUE(empty.out.empty());
}

TEST_F(CliTest, UnreachableEndpoint) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  const std::string endpoint = "127.0.0.1:" + std::to_string(ntohs(addr.sin_port));
  ::close(fd);
  const auto r = run_cli({"correct", "--vocab", path("vocab.txt"), "--backend", "external",
                          "--endpoint", endpoint, "--timeout-ms", "300", "bir iki üç"});
  EXPECT_EQ(r.code, cli::kExitFailure);
  EXPECT_TRUE(r.out.empty());
  EXPECT_NE(r.err.find("timed out"), std::string::npos) << r.err;
}

TEST_F(CliTest, EvaluateOracleAndBaseline) {
  write_corpus("corpus.jsonl", 30, 4);
  ASSERT_EQ(run_cli({"prepare", "--vocab", path("vocab.txt"), "--input", path("corpus.jsonl"),
                     "--output", path("prep")})
                .code,
            0);
  const auto oracle = run_cli({"evaluate", "--vocab", path("vocab.txt"), "--backend", "oracle",
                               "--input", path("prep/test.jsonl"), "--json", path("eval.json"),
                               "--confusion-csv", path("cm")});
  ASSERT_EQ(oracle.code, 0) << oracle.err;
  const std::string json = slurp(dir_ / "eval.json");
  EXPECT_NE(json.find("\"micro_f1\":1.0"), std::string::npos) << json;
  EXPECT_TRUE(fs::exists(dir_ / "cm_punct.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "cm_caps.csv"));

  ASSERT_EQ(run_cli({"train-baseline", "--vocab", path("vocab.txt"), "--input",
                     path("prep/train.jsonl"), "--model-path", path("model.json")})
                .code,
            0);
  const auto base = run_cli({"evaluate", "--vocab", path("vocab.txt"), "--model-path",
                             path("model.json"), "--input", path("prep/test.jsonl")});
  EXPECT_EQ(base.code, 0) << base.err;
  EXPECT_NE(base.out.find("macro"), std::string::npos);

  const auto bench = run_cli({"bench", "--vocab", path("vocab.txt"), "--model-path",
                              path("model.json"), "--input", path("prep/test.jsonl"), "-n", "10",
                              "--json", path("bench.json")});
  ASSERT_EQ(bench.code, 0) << bench.err;
  EXPECT_NE(slurp(dir_ / "bench.json").find("\"n_examples\":10"), std::string::npos);
}

TEST_F(CliTest, StatsMatchesNaiveScan) {
  const auto texts = write_corpus("corpus.jsonl", 25, 5);
  const auto r = run_cli({"stats", "--vocab", path("vocab.txt"), "--input", path("corpus.jsonl"),
                          "--max-len", "40", "--json", path("stats.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::map<char, std::uint64_t> naive;
  for (const auto& t : texts) {
    for (const auto& [mark, n] : testing::naive_mark_scan(t)) naive[mark] += n;
  }
  const auto json = nlohmann::json::parse(slurp(dir_ / "stats.json"));
  for (PunctLabel l : kAllPunctLabels) {
    if (l == PunctLabel::None) continue;
    const std::string mark(1, *punct_char(l));
    std::uint64_t total = 0;
    for (const auto& [split, row] : json.items()) total += row.at(mark).get<std::uint64_t>();
    EXPECT_EQ(total, naive[*punct_char(l)]) << mark << "\n" << r.out;
  }
}

}  // namespace
}  // namespace noktalama
