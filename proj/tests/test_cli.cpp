#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "deflation/result_io.hpp"

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(DEFLATE_BIN) + " " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), p)) r.out += buf.data();
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace

TEST_CASE("cli exit codes") {
  CHECK(run("--help").code == 0);
  CHECK(run("").code == 2);
  CHECK(run("bogus").code == 2);
  CHECK(run("himmelblau --p -1").code == 2);
  CHECK(run("himmelblau --mode sideways").code == 2);
  CHECK(run("himmelblau --x0 1,zz").code == 2);
  CHECK(run("truss --volume-fraction 1.5").code == 2);
  CHECK(run("himmelblau --config /nonexistent.cfg").code == 2);
  CHECK(run("himmelblau --x0 1,2,3").code == 1);
  CHECK(run("himmelblau --out /nonexistent-dir/x.json").code == 1);
}

TEST_CASE("cli roots prints every root") {
  const Run r = run("roots --system cubic --x0 0.6 --num-solutions 3");
  CHECK(r.code == 0);
  std::size_t count = 0;
  for (std::size_t pos = r.out.find("root: "); pos != std::string::npos; pos = r.out.find("root: ", pos + 1))
    ++count;
  CHECK(count == 3);
  CHECK(r.out.find("3 solution(s) accepted") != std::string::npos);
}

TEST_CASE("cli himmelblau writes a readable result file") {
  const auto path = std::filesystem::temp_directory_path() / "deflation_cli_h.json";
  const auto csv = std::filesystem::temp_directory_path() / "deflation_cli_h.csv";
  const Run r = run("himmelblau --num-solutions 2 --out " + path.string() + " --csv " + csv.string());
  CHECK(r.code == 0);
  const deflation::ResultFile f = deflation::read_result(path.string());
  CHECK(f.name.rfind("himmelblau", 0) == 0);
  std::size_t accepted = 0;
  for (const auto& rec : f.records) accepted += rec.accepted;
  CHECK(accepted == 2);
  CHECK(std::filesystem::exists(csv));
  std::filesystem::remove(path);
  std::filesystem::remove(csv);
}

TEST_CASE("cli kkt-check table") {
  const Run r = run("kkt-check --n 5 --m 2 --states 20");
  CHECK(r.code == 0);
  CHECK(r.out.find("undeflated reduced KKT symmetry defect") != std::string::npos);
  CHECK(r.out.find("deflated Jacobian vs FD") != std::string::npos);
}
