#pragma once

// Minimal popen wrapper for driving the built command-line binary from
// tests: runs a shell command, captures interleaved stdout/stderr, and
// reports the exit status.

#include <array>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <sys/wait.h>

namespace proc {

struct RunResult {
  int status = -1;
  std::string output;
};

inline RunResult run(const std::string& command) {
  const std::string cmd = command + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed: " + command);
  RunResult res;
  std::array<char, 4096> buf;
  size_t got = 0;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) {
    res.output.append(buf.data(), got);
  }
  const int rc = ::pclose(pipe);
  res.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  return res;
}

}  // namespace proc
