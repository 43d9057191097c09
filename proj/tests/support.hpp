#pragma once

#include "stag/types.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace stag::test {

inline Track make_track(const std::string& video, int id, int first, int last, const Box& box) {
  Track t;
  t.video_id = video;
  t.track_id = id;
  for (int f = first; f <= last; ++f) t.observations[f] = box;
  return t;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("stag-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

 private:
  std::filesystem::path path_;
};

inline std::filesystem::path data_dir() { return STAG_TEST_DATA_DIR; }

}  // namespace stag::test
