#include <doctest.h>

#include <sys/wait.h>

#include <unistd.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

// Runs the CLI with `args`, capturing stdout; stderr goes to `err_file`.
Run run_cli(const std::string& args, const fs::path& err_file = "/dev/null") {
  const auto cmd = std::string(GROUNDCOT_CLI) + " " + args + " 2>" + err_file.string();
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class Workspace {
 public:
  Workspace() : dir_(fs::temp_directory_path() / ("groundcot_cli_" + std::to_string(::getpid()))) {
    fs::create_directories(dir_);
  }
  ~Workspace() {
    std::error_code ec;
    fs::remove_all(dir_, ec);
  }
  fs::path write(const std::string& name, const std::string& content) const {
    const auto p = dir_ / name;
    std::ofstream(p) << content;
    return p;
  }
  fs::path path(const std::string& name) const { return dir_ / name; }

 private:
  fs::path dir_;
};

const char* kFourRecords =
    R"({"id":"1","raw_output":"<think>reason</think><answer>7</answer>","gold_answer":"7"})" "\n"
    R"({"id":"2","raw_output":"<think>reason</think><answer>12</answer>","gold_answer":"12.3"})" "\n"
    R"({"id":"3","raw_output":"<think>reason</think><answer>no</answer>","gold_answer":"yes"})" "\n"
    R"({"id":"4","raw_output":"I think 5","gold_answer":"5"})" "\n";

}  // namespace

TEST_CASE("validate") {
  Workspace ws;
  const auto good = ws.write("good.txt",
                             "<think>a</think><answer>1</answer>\n"
                             "<think><points x0=\"1.0\" y0=\"2.0\">bar</points>read</think><answer>2</answer>\n"
                             R"({"raw_output":"<think>c</think><answer>3</answer>"})" "\n");
  const auto ok = run_cli("validate " + good.string());
  CHECK(ok.status == 0);
  CHECK(ok.out == "line 1: OK\nline 2: OK\nline 3: OK\n");

  const auto bad = ws.write("bad.txt",
                            "<think>a</think><answer>1</answer>\n"
                            "<think><points x0=\"1\" y0=\"2\" x2=\"3\" y2=\"4\">b</points>t</think><answer>x</answer>\n");
  const auto fail = run_cli("validate " + bad.string());
  CHECK(fail.status == 1);
  CHECK(fail.out.find("line 1: OK") != std::string::npos);
  CHECK(fail.out.find("line 2: FAIL think_intact=false answer_extractable=true") != std::string::npos);
  CHECK(fail.out.find("not contiguous") != std::string::npos);

  const auto json = ws.write("json.txt",
                             R"({"think":[{"text":"a"}],"answer":"1"})" "\n"
                             R"({"think":[{"points":[{"x":1.0,"y":2.0}],"description":"d","text":"t"}],"answer":"2"})" "\n");
  CHECK(run_cli("--format json validate " + json.string()).status == 0);
  const auto mixed = run_cli("--format xml validate " + json.string());
  CHECK(mixed.status == 1);
  CHECK(mixed.out.find("line 1: FAIL think_intact=false answer_extractable=false") != std::string::npos);
  CHECK(mixed.out.find("line 2: FAIL think_intact=false answer_extractable=false") != std::string::npos);

  const auto one_based = ws.write("one.txt", "<think><points x1=\"1\" y1=\"2\">b</points>t</think><answer>x</answer>\n");
  CHECK(run_cli("--indexing 1 validate " + one_based.string()).status == 0);
  CHECK(run_cli("validate " + one_based.string()).status == 1);
}

TEST_CASE("eval and score") {
  Workspace ws;
  const auto recs = ws.write("recs.jsonl", kFourRecords);
  const auto r = run_cli("eval " + recs.string());
  CHECK(r.status == 0);
  CHECK(r.out.find("50.00") != std::string::npos);
  CHECK(r.out.find(R"({"n":4,"n_compliant":3,"n_correct_overall":2,"n_correct_inner":2,"overall":0.5,)") !=
        std::string::npos);

  const auto report = ws.path("report.txt");
  CHECK(run_cli("eval " + recs.string() + " -o " + report.string()).status == 0);
  CHECK(slurp(report) == r.out);

  const auto s = run_cli("score " + recs.string());
  CHECK(s.status == 0);
  CHECK(s.out.find(R"({"id":"4","format_reward":0.0,"accuracy_reward":0.0,"total":0.0})") != std::string::npos);
  CHECK(s.out.find(R"({"id":"2","format_reward":1.0,"accuracy_reward":1.0,"total":2.0})") != std::string::npos);

  // A tighter tolerance turns 12 vs 12.3 wrong.
  CHECK(run_cli("--tolerance 0.01 score " + recs.string())
            .out.find(R"({"id":"2","format_reward":1.0,"accuracy_reward":0.0,"total":1.0})") != std::string::npos);

  const auto broken = ws.write("broken.jsonl", std::string(kFourRecords) + "{oops\n");
  const auto out = ws.path("never.txt");
  const auto err = ws.path("err.txt");
  CHECK(run_cli("eval " + broken.string() + " -o " + out.string(), err).status == 2);
  CHECK(slurp(err).find("line 5") != std::string::npos);
  CHECK_FALSE(fs::exists(out));
  CHECK_FALSE(fs::exists(out.string() + ".partial"));
}

TEST_CASE("stats") {
  Workspace ws;
  const auto corpus = ws.write(
      "corpus.jsonl",
      R"({"id":"a","source":"ChartQA","trace":"<think>s1\n\ns2\n\ns3\n\ns4</think><answer>1</answer>"})" "\n"
      R"({"id":"b","source":"ChartQA","trace":"<think><points x0=\"1.0\" y0=\"1.0\">p</points>s1\n\ns2</think><answer>2</answer>"})" "\n");
  const auto r = run_cli("stats " + corpus.string());
  CHECK(r.status == 0);
  CHECK(r.out.find("ChartQA |        2 | 100.0% |  3.00 |   0.50") != std::string::npos);
  CHECK(r.out.find(R"("mean_turns":3.0)") != std::string::npos);
}

TEST_CASE("datagen") {
  Workspace ws;
  std::string triplets;
  for (int i = 0; i < 30; ++i) {
    triplets += "{\"id\":\"t" + std::to_string(i) +
                "\",\"image_ref\":\"x.png\",\"question\":\"q\",\"gold_answer\":\"5\",\"source\":\"ChartQA\"}\n";
  }
  const auto in = ws.write("triplets.jsonl", triplets);
  const auto a = ws.path("a.jsonl");
  const auto b = ws.path("b.jsonl");
  CHECK(run_cli("--seed 4 datagen " + in.string() + " -o " + a.string() + " --success-prob 0.5").status == 0);
  CHECK(run_cli("--seed 4 datagen " + in.string() + " -o " + b.string() + " --success-prob 0.5 --workers 3").status == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK_FALSE(slurp(a).empty());
  const auto stats = run_cli("stats " + a.string());
  CHECK(stats.status == 0);
  CHECK(run_cli("datagen " + in.string()).status != 0);
}

TEST_CASE("simulate") {
  Workspace ws;
  const auto a = ws.path("a.csv");
  const auto b = ws.path("b.csv");
  CHECK(run_cli("--seed 7 simulate --steps 50 -o " + a.string()).status == 0);
  CHECK(run_cli("--seed 7 simulate --steps 50 -o " + b.string()).status == 0);
  const auto csv = slurp(a);
  CHECK(csv == slurp(b));
  CHECK(csv.rfind("step,mean_reward,format_rate,accuracy_rate,objective\n0,1,0.5,0.5,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 52);
  CHECK(run_cli("--seed 8 simulate --steps 50").out != csv);

  const auto cfg = ws.write("sim.toml", "seed = 7\n[simulate]\nsteps = 50\n");
  CHECK(run_cli("--config " + cfg.string() + " simulate").out == csv);
}

TEST_CASE("configuration and errors") {
  Workspace ws;
  const auto bad_cfg = ws.write("bad.toml", "no_such_key = 1\n");
  const auto recs = ws.write("recs.jsonl", kFourRecords);
  CHECK(run_cli("--config " + bad_cfg.string() + " eval " + recs.string()).status != 0);

  const auto err = ws.path("err.txt");
  const auto missing = run_cli("validate /nonexistent/input.txt", err);
  CHECK(missing.status != 0);
  CHECK(slurp(err).find("/nonexistent/input.txt") != std::string::npos);

  const auto log = ws.path("log.txt");
  CHECK(run_cli("--tolerance 0.1 eval " + recs.string(), log).status == 0);
  const auto resolved = slurp(log);
  CHECK(resolved.find("tolerance=0.1") != std::string::npos);
  CHECK(resolved.find("[eval]") != std::string::npos);

  CHECK(run_cli("--tolerance 1.5 eval " + recs.string()).status != 0);
  CHECK(run_cli("--format yaml eval " + recs.string()).status != 0);
  CHECK(run_cli("").status != 0);
}
