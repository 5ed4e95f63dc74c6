#pragma once

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "alignkit/errors.hpp"
#include "alignkit/log.hpp"

namespace alignkit {

using json = nlohmann::json;

struct LoadStats {
  std::size_t records = 0;
  bool truncated_tail = false;
  std::size_t tail_offset = 0;
};

/// Load an append-only record stream: one JSON object per '\n'-terminated
/// line. Trailing bytes after the last newline are the remains of a write cut
/// short by a crash; they are ignored with a warning. A newline-terminated
/// line that fails to parse is corruption and raises a hard error naming the
/// byte offset. The append unit is always "<json>\n" in a single write, so
/// crash damage is confined to the tail.
inline std::vector<json> load_jsonl(const std::filesystem::path& path,
                                    LoadStats* stats = nullptr) {
  std::vector<json> out;
  LoadStats local;
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) {
    if (!std::filesystem::exists(path)) {
      if (stats) *stats = local;
      return out;
    }
    throw DataError("cannot open record stream: " + path.string());
  }
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t offset = 0;
  while (offset < content.size()) {
    const std::size_t nl = content.find('\n', offset);
    if (nl == std::string::npos) {
      local.truncated_tail = true;
      local.tail_offset = offset;
      log_warn("ignoring truncated trailing record at byte " + std::to_string(offset) +
               " of " + path.string());
      break;
    }
    if (nl > offset) {  // empty lines are tolerated as padding
      json rec = json::parse(content.substr(offset, nl - offset), nullptr, false);
      if (rec.is_discarded()) {
        throw DataError("corrupt record at byte " + std::to_string(offset) + " of " +
                        path.string());
      }
      out.push_back(std::move(rec));
      ++local.records;
    }
    offset = nl + 1;
  }
  if (stats) *stats = local;
  return out;
}

/// Single-writer append handle for one record stream. Holds an exclusive
/// advisory lock (flock) for its lifetime; a second concurrent writer on the
/// same stream is a usage error and is reported immediately. Readers do not
/// take locks.
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::filesystem::path& path) : path_(path) {
    std::filesystem::create_directories(path.parent_path());
    fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd_ < 0) {
      throw DataError("cannot open stream for append: " + path.string() + ": " +
                      std::strerror(errno));
    }
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      fd_ = -1;
      throw DataError("stream already has a writer (advisory lock busy): " + path.string());
    }
  }

  JsonlWriter(const JsonlWriter&) = delete;
  JsonlWriter& operator=(const JsonlWriter&) = delete;
  JsonlWriter(JsonlWriter&& other) noexcept : path_(std::move(other.path_)), fd_(other.fd_) {
    other.fd_ = -1;
  }

  ~JsonlWriter() {
    if (fd_ >= 0) ::close(fd_);  // closing drops the flock
  }

  void append(const json& rec) {
    std::string line = rec.dump();
    line.push_back('\n');
    write_all(line);
    ++written_;
  }

  template <class Range>
  std::size_t append_many(const Range& recs) {
    std::size_t n = 0;
    for (const auto& r : recs) {
      append(r);
      ++n;
    }
    return n;
  }

  void flush() {
    if (fd_ >= 0) ::fsync(fd_);
  }

  std::size_t written() const { return written_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  void write_all(const std::string& buf) {
    const char* p = buf.data();
    std::size_t left = buf.size();
    while (left > 0) {
      const ssize_t n = ::write(fd_, p, left);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw DataError("write failed on " + path_.string() + ": " + std::strerror(errno));
      }
      p += n;
      left -= static_cast<std::size_t>(n);
    }
  }

  std::filesystem::path path_;
  int fd_ = -1;
  std::size_t written_ = 0;
};

template <class Range>
inline std::size_t append_jsonl(const std::filesystem::path& path, const Range& recs) {
  JsonlWriter w(path);
  const std::size_t n = w.append_many(recs);
  w.flush();
  return n;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw DataError("cannot read file: " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

/// Write-temp-then-rename. Files written this way appear atomically; partial
/// content is never visible under the final name.
inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out.good()) throw DataError("cannot write temp file: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out.good()) throw DataError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::size_t count_jsonl_records(const std::filesystem::path& path) {
  return load_jsonl(path).size();
}

}  // namespace alignkit
