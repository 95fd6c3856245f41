#include "mcpshield/protocol/transport.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <utility>

namespace mcpshield::protocol {

InMemoryTransport::InMemoryTransport(LineHandler server) : server_(std::move(server)) {}

void InMemoryTransport::write_line(const std::string& line) {
  sent_.push_back(line);
  std::vector<std::string> replies;
  server_(line, replies, channel_);
  for (auto& r : replies) inbox_.push_back(std::move(r));
}

std::optional<std::string> InMemoryTransport::read_line(std::chrono::milliseconds /*timeout*/) {
  if (inbox_.empty()) return std::nullopt;  // nothing pending behaves like EOF
  std::string line = std::move(inbox_.front());
  inbox_.pop_front();
  return line;
}

StdioTransport::StdioTransport(pid_t pid, int to_child, int from_child)
    : pid_(pid), to_child_(to_child), from_child_(from_child) {}

std::unique_ptr<StdioTransport> StdioTransport::spawn(const std::vector<std::string>& argv) {
  if (argv.empty()) throw TransportError("spawn requires a command");

  int to_child[2] = {-1, -1};
  int from_child[2] = {-1, -1};
  if (pipe(to_child) != 0 || pipe(from_child) != 0) {
    throw TransportError("pipe() failed: " + std::string(strerror(errno)));
  }

  pid_t pid = fork();
  if (pid < 0) throw TransportError("fork() failed: " + std::string(strerror(errno)));

  if (pid == 0) {
    dup2(to_child[0], STDIN_FILENO);
    dup2(from_child[1], STDOUT_FILENO);
    close(to_child[0]);
    close(to_child[1]);
    close(from_child[0]);
    close(from_child[1]);
    std::vector<char*> args;
    args.reserve(argv.size() + 1);
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    execvp(args[0], args.data());
    _exit(127);
  }

  close(to_child[0]);
  close(from_child[1]);
  return std::unique_ptr<StdioTransport>(new StdioTransport(pid, to_child[1], from_child[0]));
}

StdioTransport::~StdioTransport() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (pid_ > 0) {
    // Give the child a moment to exit on EOF, then escalate.
    for (int i = 0; i < 50; ++i) {
      int status = 0;
      if (waitpid(pid_, &status, WNOHANG) == pid_) return;
      usleep(10'000);
    }
    kill(pid_, SIGTERM);
    for (int i = 0; i < 50; ++i) {
      int status = 0;
      if (waitpid(pid_, &status, WNOHANG) == pid_) return;
      usleep(10'000);
    }
    kill(pid_, SIGKILL);
    waitpid(pid_, nullptr, 0);
  }
}

void StdioTransport::write_line(const std::string& line) {
  const char* data = line.data();
  size_t remaining = line.size();
  while (remaining > 0) {
    ssize_t n = write(to_child_, data, remaining);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError("write to server failed: " + std::string(strerror(errno)));
    }
    data += n;
    remaining -= static_cast<size_t>(n);
  }
}

std::optional<std::string> StdioTransport::read_line(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl + 1);
      buffer_.erase(0, nl + 1);
      return line;
    }

    auto now = std::chrono::steady_clock::now();
    if (now >= deadline) throw TimeoutError("server response deadline exceeded");
    auto wait_ms = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();

    struct pollfd pfd = {from_child_, POLLIN, 0};
    int rc = poll(&pfd, 1, static_cast<int>(wait_ms));
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw TransportError("poll failed: " + std::string(strerror(errno)));
    }
    if (rc == 0) throw TimeoutError("server response deadline exceeded");

    char chunk[4096];
    ssize_t n = read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError("read from server failed: " + std::string(strerror(errno)));
    }
    if (n == 0) {
      if (buffer_.empty()) return std::nullopt;  // clean EOF
      std::string line = std::move(buffer_);
      buffer_.clear();
      return line;  // final unterminated line
    }
    buffer_.append(chunk, static_cast<size_t>(n));
  }
}

}  // namespace mcpshield::protocol
