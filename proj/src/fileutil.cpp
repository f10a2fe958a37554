#include "attn_spectra/fileutil.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "attn_spectra/error.hpp"

namespace fs = std::filesystem;

namespace attn_spectra::fileutil {

void write_atomic(const fs::path& path, std::span<const char> bytes) {
  fs::path tmp = path;
  tmp += fmt::format(".tmp{}", ::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::IoFailure, fmt::format("cannot open '{}' for writing", tmp.string()));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ignored;
      fs::remove(tmp, ignored);
      fail(ErrorKind::IoFailure, fmt::format("short write to '{}'", tmp.string()));
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    fail(ErrorKind::IoFailure, fmt::format("cannot rename into '{}': {}", path.string(), ec.message()));
  }
}

void write_atomic(const fs::path& path, std::string_view text) {
  write_atomic(path, std::span<const char>(text.data(), text.size()));
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoFailure, fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    fail(ErrorKind::IoFailure,
         fmt::format("cannot create directory '{}'{}", dir.string(), ec ? ": " + ec.message() : ""));
  }
}

DirectoryLock::DirectoryLock(const fs::path& dir) {
  const auto lock_path = dir / ".lock";
  fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
  if (fd_ < 0) {
    fail(ErrorKind::IoFailure,
         fmt::format("cannot open lock '{}': {}", lock_path.string(), std::strerror(errno)));
  }
  if (::flock(fd_, LOCK_EX) != 0) {
    ::close(fd_);
    fail(ErrorKind::IoFailure, fmt::format("cannot lock '{}'", lock_path.string()));
  }
}

DirectoryLock::~DirectoryLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace attn_spectra::fileutil
