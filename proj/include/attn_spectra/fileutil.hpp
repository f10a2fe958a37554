#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace attn_spectra::fileutil {

/// Writes `bytes` to `path` through a sibling temp file and a rename, so
/// readers never observe a half-written file. Throws Error(IoFailure).
void write_atomic(const std::filesystem::path& path, std::span<const char> bytes);
void write_atomic(const std::filesystem::path& path, std::string_view text);
inline void write_atomic(const std::filesystem::path& path, const std::string& text) {
  write_atomic(path, std::string_view(text));
}

std::string read_text(const std::filesystem::path& path);

/// Creates the directory (and parents); throws Error(IoFailure) if that fails
/// or the path exists but is not a directory.
void ensure_directory(const std::filesystem::path& dir);

/// Exclusive advisory lock on `<dir>/.lock`, held for the object's lifetime.
class DirectoryLock {
 public:
  explicit DirectoryLock(const std::filesystem::path& dir);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  int fd_ = -1;
};

/// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view text);

}  // namespace attn_spectra::fileutil
