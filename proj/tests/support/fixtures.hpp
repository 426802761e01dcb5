#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "bdcraft/raster.hpp"

namespace fixture {

/// Uniform samples in [lo, hi) from a seeded generator.
bdcraft::Raster random_raster(std::size_t w, std::size_t h, std::uint64_t seed, double lo = 0.0, double hi = 1.0);

/// Fresh, empty directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

std::string slurp(const std::filesystem::path& p);
void spit(const std::filesystem::path& p, const std::string& text);

}  // namespace fixture
