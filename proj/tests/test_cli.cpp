#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(THUNDERNNA_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

// Small synthetic setup shared by the tests below.
const std::string kData = "--synth-side 8 --synth-classes 4";

const std::string& model() {
  static const std::string path = [] {
    const std::string p = (fs::temp_directory_path() / "thundernna_cli_model.thnk").string();
    const Run r = run("train " + kData + " --synth-n 400 --epochs 5 --out " + p);
    REQUIRE(r.code == 0);
    return p;
  }();
  return path;
}

}  // namespace

TEST_CASE("check-theory passes with one documented discrepancy") {
  const Run r = run("check-theory");
  CHECK(r.code == 0);
  CHECK(r.out.find("FAIL") == std::string::npos);
  CHECK(r.out.find("DISCREPANCY") != std::string::npos);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(run("").code == 2);
  CHECK(run("frobnicate").code == 2);
  CHECK(run("check-theory --bogus").code == 2);
  CHECK(run("attack --model " + model() + " --method fgsm --eps 0").code == 2);
  CHECK(run("attack --model " + model() + " --method fgsm --eps 1.5").code == 2);
  CHECK(run("attack --model " + model() + " --method cw --eps 0.1").code == 2);
  CHECK(run("sweep --model m --budgets 0.1,0 --out x.csv").code == 2);
  CHECK(run("--help").code == 0);
}

TEST_CASE("runtime errors exit with 1") {
  CHECK(run("attack --model /nonexistent.thnk --method fgsm --eps 0.1").code == 1);
  CHECK(run("attack --model " + model() + " " + kData +
            " --method fgsm --eps 0.1 --index 100000")
            .code == 1);
}

TEST_CASE("attack prints one outcome") {
  const Run r = run("attack --model " + model() + " " + kData +
                    " --method pgd --eps 0.2 --index 3");
  REQUIRE(r.code == 0);
  CHECK(count_lines(r.out) == 1);
  CHECK(r.out.find("\"grad_evals\":8") != std::string::npos);
  CHECK(r.out.find("\"method\":\"pgd\"") != std::string::npos);
}

TEST_CASE("sweep writes header plus 20 rows and is byte-stable without timing") {
  const std::string a = (fs::temp_directory_path() / "thundernna_cli_a.csv").string();
  const std::string b = (fs::temp_directory_path() / "thundernna_cli_b.csv").string();
  const std::string args = "sweep --model " + model() + " " + kData + " --synth-n 60 --no-timing ";
  REQUIRE(run(args + "--out " + a).code == 0);
  REQUIRE(run(args + "--threads 3 --out " + b).code == 0);
  const std::string text = slurp(a);
  CHECK(count_lines(text) == 21);
  CHECK(text.rfind("attack,budget,n_attacked,success_rate,mean_linf,mean_l2,seconds_per_50\n", 0) == 0);
  CHECK(text == slurp(b));
}

TEST_CASE("sweep can dump adversarial examples as IDX") {
  const fs::path dir = fs::temp_directory_path() / "thundernna_cli_dump";
  fs::remove_all(dir);
  const std::string csv = (dir / "r.csv").string();
  fs::create_directories(dir);
  REQUIRE(run("sweep --model " + model() + " " + kData +
              " --synth-n 20 --methods fgsm --budgets 0.2 --dump-dir " + dir.string() +
              " --out " + csv)
              .code == 0);
  CHECK(fs::exists(dir / "fgsm_eps0.200000-images.idx"));
  CHECK(fs::exists(dir / "fgsm_eps0.200000-labels.idx"));
}

TEST_CASE("bench reports gradient evaluations per image") {
  const Run r = run("bench --model " + model() + " " + kData + " --synth-n 50 --repeats 1");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("fgsm,") != std::string::npos);
  CHECK(r.out.find(",8.000000,") != std::string::npos);
}

TEST_CASE("gradcheck passes") {
  const Run r = run("gradcheck --seed 3 --trials 20");
  CHECK(r.code == 0);
  CHECK(r.out.find("PASS") != std::string::npos);
}
