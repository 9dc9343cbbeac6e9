#include <doctest.h>

#include <atomic>
#include <stdexcept>

#include "mindmap/util.hpp"
#include "support.hpp"

using namespace mindmap;

TEST_CASE("fnv1a64 matches published test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("sha256_hex matches FIPS 180-2 vectors") {
  CHECK(sha256_hex(std::string_view("abc")) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex(std::string_view("")) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("string helpers") {
  CHECK(trim("  a b \t\n") == "a b");
  CHECK(trim("") == "");
  CHECK(split_whitespace("  x  y\tz ") == std::vector<std::string>{"x", "y", "z"});
  CHECK(split("a,,b", ',') == std::vector<std::string>{"a", "", "b"});
  CHECK(ascii_lower("MiXeD") == "mixed");
  CHECK(url_encode("Computer Science/x") == "Computer%20Science%2Fx");
  CHECK(url_encode("a-b_c.d~") == "a-b_c.d~");
}

TEST_CASE("split_url") {
  auto p = split_url("https://api.example.com:8443/v1/chat?x=1");
  CHECK(p.origin == "https://api.example.com:8443");
  CHECK(p.path == "/v1/chat?x=1");
  CHECK(split_url("http://host").path == "/");
  CHECK(mmtest::error_kind([] { split_url("no-scheme"); }) == ErrorKind::Config);
}

TEST_CASE("write_file_atomic replaces content and leaves no temp files") {
  mmtest::TempDir dir;
  const auto path = dir.path() / "sub" / "f.txt";
  write_file_atomic(path, std::string_view("one"));
  write_file_atomic(path, std::string_view("two"));
  CHECK(read_file(path) == "two");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(path.parent_path())) ++files;
  CHECK(files == 1);
}

TEST_CASE("read_file on a missing path is an Io error") {
  CHECK(mmtest::error_kind([] { read_file("/nonexistent/mindmap/x"); }) == ErrorKind::Io);
}

TEST_CASE("parallel_for visits every index once and rethrows") {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), 8, [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS_AS(parallel_for(100, 4,
                               [](std::size_t i) {
                                 if (i == 37) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
  parallel_for(0, 4, [](std::size_t) { FAIL("no work expected"); });
}

TEST_CASE("Error carries kind and detail") {
  Error e(ErrorKind::DuplicateName, "Music");
  CHECK(e.kind() == ErrorKind::DuplicateName);
  CHECK(e.detail() == "Music");
  CHECK(std::string(e.what()) == "DuplicateName: Music");
}
