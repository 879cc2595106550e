#pragma once

#include <sys/types.h>

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

namespace dfrl::detail {

/// Child process whose stdout is piped back to the parent.
class ChildProcess {
 public:
  ChildProcess(const std::filesystem::path& exe, const std::vector<std::string>& args);
  ~ChildProcess();

  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  /// Reads one stdout line; throws kIo on timeout or EOF.
  std::string read_line(std::chrono::milliseconds timeout);

  /// Waits for exit, killing the child after `grace`. Returns the exit status.
  int wait(std::chrono::milliseconds grace);

 private:
  pid_t pid_ = -1;
  int stdout_fd_ = -1;
  std::string buffered_;
  bool reaped_ = false;
  int status_ = 0;
};

}  // namespace dfrl::detail
