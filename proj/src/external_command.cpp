#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "gdlgen/metrics.hpp"

namespace gdlgen {

CommandResult run_command(const std::string& command, std::string_view input, std::chrono::milliseconds timeout) {
  // A hook that exits without reading stdin must not kill us with SIGPIPE.
  static std::once_flag ignore_sigpipe;
  std::call_once(ignore_sigpipe, [] { ::signal(SIGPIPE, SIG_IGN); });

  CommandResult result;
  int in_pipe[2];
  if (::pipe(in_pipe) != 0) {
    result.error = fmt::format("pipe: {}", std::strerror(errno));
    return result;
  }
  pid_t pid = ::fork();
  if (pid < 0) {
    result.error = fmt::format("fork: {}", std::strerror(errno));
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    return result;
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    int devnull = ::open("/dev/null", O_WRONLY);
    if (devnull >= 0) {
      ::dup2(devnull, STDOUT_FILENO);
      ::dup2(devnull, STDERR_FILENO);
      ::close(devnull);
    }
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  int writer = in_pipe[1];
  ::fcntl(writer, F_SETFL, ::fcntl(writer, F_GETFL) | O_NONBLOCK);
  std::size_t written = 0;
  auto feed = [&] {
    while (writer >= 0 && written < input.size()) {
      auto n = ::write(writer, input.data() + written, input.size() - written);
      if (n < 0) {
        if (errno == EINTR) continue;
        if (errno == EAGAIN) return;
        written = input.size();  // reader went away
        break;
      }
      written += static_cast<std::size_t>(n);
    }
    if (writer >= 0 && written >= input.size()) {
      ::close(writer);
      writer = -1;
    }
  };

  const auto deadline = std::chrono::steady_clock::now() + timeout;
  int status = 0;
  for (;;) {
    feed();
    pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0 && errno != EINTR) {
      result.error = fmt::format("waitpid: {}", std::strerror(errno));
      break;
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      result.timed_out = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  if (writer >= 0) ::close(writer);
  if (result.timed_out || !result.error.empty()) return result;
  if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
  return result;
}

}  // namespace gdlgen
