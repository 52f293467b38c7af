#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "doctest.h"
#include "ragbreaker/error.hpp"

namespace testing {

namespace fs = std::filesystem;

inline const fs::path kFixtures = RAGBREAKER_FIXTURES;

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("ragbreaker-test-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testing

// Asserts that `expr` throws ragbreaker::Error carrying `ec`.
#define CHECK_THROWS_CODE(expr, ec)                                   \
  do {                                                                \
    bool thrown_ = false;                                             \
    try {                                                             \
      (void)(expr);                                                   \
    } catch (const ragbreaker::Error& e_) {                           \
      thrown_ = true;                                                 \
      CHECK_MESSAGE(e_.code() == (ec),                                \
                    "got " << ragbreaker::error_code_name(e_.code())); \
    }                                                                 \
    CHECK_MESSAGE(thrown_, "expected " << ragbreaker::error_code_name(ec)); \
  } while (0)
