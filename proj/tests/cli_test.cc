// Copyright 2026 The KBLSTM Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Drives the kblstm binary end to end and checks exit codes and output.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(KBLSTM_CLI) + " " + args + " 2>/dev/null";
  CliRun r;
  FILE* p = popen(cmd.c_str(), "r");
  if (p == nullptr) return r;
  char buf[4096];
  size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string data(const std::string& name) { return std::string(KBLSTM_TEST_DATA) + "/" + name; }

std::string scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "kblstm_cli_test";
  fs::create_directories(dir);
  return (dir / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string l;
  while (std::getline(in, l)) out.push_back(l);
  return out;
}

const char* kSmallSynth =
    "--vocab 60 --categories 4 --ambiguous 6 --train-sentences 60 "
    "--dev-sentences 20 --test-sentences 20";

TEST(CliTest, UsageErrorsExitOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("grad-audit --dropout 1.5").code, 1);
  EXPECT_EQ(run("tag --model x.kbl").code, 1);
  EXPECT_EQ(run("grad-audit --corrupt nothing").code, 1);
}

TEST(CliTest, HelpExitsZero) {
  const CliRun r = run("tag --help");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("--model"), std::string::npos);
}

TEST(CliTest, GradAuditReportsFourComponents) {
  const CliRun r = run("grad-audit");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 4u);
  for (const auto& l : ls) EXPECT_NE(l.find("\tPASS\t"), std::string::npos) << l;
}

TEST(CliTest, CorruptedGradientExitsThree) {
  const CliRun r = run("grad-audit --corrupt rnn");
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(r.out.find("rnn\t"), 0u);
  EXPECT_NE(lines(r.out)[0].find("FAIL"), std::string::npos);
}

TEST(CliTest, DataErrorsExitTwo) {
  EXPECT_EQ(run("tag --model /nonexistent.kbl --input " + data("small.txt")).code, 2);
  const CliRun v = run("validate --corpus " + data("bad_bio.txt"));
  EXPECT_EQ(v.code, 2);
  EXPECT_NE(v.out.find("bad_bio.txt:2:"), std::string::npos) << v.out;
  EXPECT_EQ(run("validate --corpus " + data("small.txt") + " --lexicon " +
                data("clinton_lexicon.tsv") + " --embeddings " + data("concepts.vec"))
                .code,
            0);
  EXPECT_EQ(run("validate --lexicon " + data("bad_lexicon.tsv") + " --embeddings " +
                data("concepts.vec"))
                .code,
            2);
}

TEST(CliTest, SynthGenIsDeterministic) {
  const std::string a = scratch("synth_a");
  const std::string b = scratch("synth_b");
  const CliRun ra = run(std::string("synth-gen --seed 3 --out ") + a + " " + kSmallSynth);
  const CliRun rb = run(std::string("synth-gen --seed 3 --out ") + b + " " + kSmallSynth);
  ASSERT_EQ(ra.code, 0);
  EXPECT_EQ(ra.out.rfind("ceiling\t", 0), 0u);
  EXPECT_EQ(ra.out, rb.out);
  for (const char* f : {"train.txt", "dev.txt", "test.txt", "kb.tsv", "lexicon.tsv",
                        "answer_key.json"}) {
    EXPECT_FALSE(slurp(a + "/" + f).empty()) << f;
    EXPECT_EQ(slurp(a + "/" + f), slurp(b + "/" + f)) << f;
  }
  EXPECT_EQ(run("validate --corpus " + a + "/train.txt --lexicon " + a +
                "/lexicon.tsv --triples " + a + "/kb.tsv")
                .code,
            0);
}

TEST(CliTest, KbTrainThenEval) {
  const std::string dir = scratch("block");
  ASSERT_EQ(run("synth-gen --kind block-kb --out " + dir).code, 0);
  const std::string model = scratch("block.kbm");
  ASSERT_EQ(run("kb-train --triples " + dir + "/kb_train.tsv --kb-dim 20 --kb-epochs 200 --out " +
                model)
                .code,
            0);
  const CliRun r = run("kb-eval --model " + model + " --test-triples " + dir +
                    "/kb_test.tsv --link-mode category --top-k 1");
  ASSERT_EQ(r.code, 0);
  ASSERT_EQ(r.out.rfind("category\ttop1\t", 0), 0u) << r.out;
  EXPECT_GE(std::stod(r.out.substr(std::string("category\ttop1\t").size())), 0.9);
}

TEST(CliTest, TrainTagEvalAndAttentionDump) {
  const std::string dir = scratch("synth_train");
  ASSERT_EQ(run(std::string("synth-gen --seed 2 --out ") + dir + " " + kSmallSynth).code, 0);
  const std::string kb = scratch("synth_train.kbm");
  const std::string emb = scratch("synth_train.vec");
  ASSERT_EQ(run("kb-train --triples " + dir + "/kb.tsv --kb-dim 8 --kb-epochs 20 --out " + kb +
                " --embeddings " + emb)
                .code,
            0);
  const std::string model = scratch("typer.kbl");
  const CliRun t = run("typer-train --train " + dir + "/train.txt --dev " + dir +
                    "/dev.txt --test " + dir + "/test.txt --lexicon " + dir +
                    "/lexicon.tsv --embeddings " + emb +
                    " --word-dim 8 --hidden 6 --epochs 2 --out " + model);
  ASSERT_EQ(t.code, 0);
  const auto tl = lines(t.out);
  ASSERT_EQ(tl.size(), 1u);
  EXPECT_EQ(tl[0].rfind("1\t", 0), 0u) << tl[0];

  const CliRun tagged = run("tag --model " + model + " --input " + dir + "/test.txt");
  ASSERT_EQ(tagged.code, 0);
  const std::string pred = scratch("pred.txt");
  std::ofstream(pred) << tagged.out;
  const CliRun e = run("eval --gold " + dir + "/test.txt --pred " + pred);
  ASSERT_EQ(e.code, 0);
  // Re-scoring the tagged output must reproduce the training report.
  EXPECT_EQ(e.out, t.out);

  const CliRun d = run("attn-dump --model " + model + " --input " + dir + "/test.txt");
  ASSERT_EQ(d.code, 0);
  EXPECT_NE(d.out.find("sentinel:"), std::string::npos);
}

TEST(CliTest, MultipleRunsPrintSummary) {
  const std::string dir = scratch("synth_runs");
  ASSERT_EQ(run(std::string("synth-gen --out ") + dir + " " + kSmallSynth).code, 0);
  const CliRun t = run("typer-train --train " + dir + "/train.txt --dev " + dir +
                    "/dev.txt --knowledge none --word-dim 8 --hidden 6 --epochs 1 --runs 2 --out " +
                    scratch("runs.kbl"));
  ASSERT_EQ(t.code, 0);
  const auto tl = lines(t.out);
  ASSERT_EQ(tl.size(), 3u);
  EXPECT_EQ(tl[2].rfind("mean±std\t", 0), 0u);
  EXPECT_TRUE(fs::exists(scratch("runs.kbl.1")));
  EXPECT_TRUE(fs::exists(scratch("runs.kbl.2")));
}

}  // namespace
