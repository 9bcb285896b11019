#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "care/care.hpp"

namespace testing_support {

inline std::filesystem::path source_dir() { return CARE_SOURCE_DIR; }
inline std::filesystem::path safety_dir() { return source_dir() / "data" / "safety"; }
inline std::filesystem::path fixture(const std::string& rel) {
  return source_dir() / "tests" / "fixtures" / rel;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "care") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

inline care::SafetyFilter default_safety() {
  care::SafetyConfig cfg;
  cfg.lexicon_path = safety_dir();
  return care::SafetyFilter::load(cfg);
}

/// Synthetic corpus, split, and models trained on its train part. Built once
/// per process since training takes a few seconds.
struct SyntheticWorld {
  std::vector<care::Conversation> corpus;
  care::CorpusSplit split;
  care::ModelBundle bundle;
};

inline const SyntheticWorld& synthetic_world() {
  static const SyntheticWorld w = [] {
    SyntheticWorld s;
    s.corpus = care::synthetic::make_corpus();
    care::SplitSpec spec;
    s.split = care::split(s.corpus, spec);
    s.bundle = care::train_models(s.split.train);
    return s;
  }();
  return w;
}

}  // namespace testing_support
