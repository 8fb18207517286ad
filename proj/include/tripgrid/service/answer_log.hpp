#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "tripgrid/error.hpp"
#include "tripgrid/service/experiment.hpp"

namespace tripgrid::service {

/// Append-only JSON-lines file. append() returns only after the line is on disk.
class AnswerLog {
 public:
  explicit AnswerLog(std::string path) : path_(std::move(path)) {
    fd_ = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw IoError("cannot open answer log " + path_ + ": " + std::strerror(errno));
  }
  AnswerLog(const AnswerLog&) = delete;
  AnswerLog& operator=(const AnswerLog&) = delete;
  ~AnswerLog() {
    if (fd_ >= 0) ::close(fd_);
  }

  const std::string& path() const noexcept { return path_; }

  void append(const AnswerRecord& r) {
    const std::string line = to_json(r).dump() + "\n";
    std::size_t done = 0;
    while (done < line.size()) {
      const auto n = ::write(fd_, line.data() + done, line.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw IoError("append to " + path_ + " failed: " + std::strerror(errno));
      }
      done += static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0) throw IoError("fsync of " + path_ + " failed: " + std::strerror(errno));
  }

 private:
  std::string path_;
  int fd_ = -1;
};

/// Missing file reads as an empty log.
inline std::vector<AnswerRecord> read_answer_log(const std::string& path) {
  std::ifstream in(path);
  std::vector<AnswerRecord> out;
  if (!in) return out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(answer_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad answer record: ") + e.what(), line_no);
    }
  }
  return out;
}

}  // namespace tripgrid::service
