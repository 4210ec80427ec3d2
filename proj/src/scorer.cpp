#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <set>
#include <unordered_map>

#include "xqm/error.hpp"
#include "xqm/metrics.hpp"

namespace xqm {

namespace {

constexpr std::size_t kMaxStderr = 64 * 1024;

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    reset();
    fd_ = std::exchange(o.fd_, -1);
    return *this;
  }
  ~Fd() { reset(); }

  int get() const { return fd_; }
  explicit operator bool() const { return fd_ >= 0; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

// Owns the child; kills and reaps it unless wait() already did.
class Child {
 public:
  explicit Child(pid_t pid) : pid_(pid) {}
  Child(const Child&) = delete;
  Child& operator=(const Child&) = delete;
  ~Child() {
    if (pid_ > 0) {
      ::kill(pid_, SIGKILL);
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
  }

  int wait() {
    int status = 0;
    while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
    }
    pid_ = -1;
    return status;
  }

 private:
  pid_t pid_;
};

std::string describe_status(int status) {
  if (WIFEXITED(status)) return "exit status " + std::to_string(WEXITSTATUS(status));
  if (WIFSIGNALED(status)) return "killed by signal " + std::to_string(WTERMSIG(status));
  return "unknown status";
}

std::string tail(const std::string& text) {
  return text.empty() ? "(no stderr output)" : text;
}

}  // namespace

std::vector<ScoreRecord> run_external_scorer(const MetricSpec& spec,
                                             const std::vector<const Triplet*>& triplets) {
  spec.validate();
  const auto* cmd = std::get_if<ExternalCommand>(&spec.kind);
  if (cmd == nullptr) throw ConfigError("metric '" + spec.name + "' is not external");
  if (triplets.empty()) throw ConfigError("no triplets to score");

  std::string requests;
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    const auto& t = *triplets[i];
    if (!position.emplace(t.triplet_id, i).second) {
      throw IntegrityError("duplicate triplet id '" + t.triplet_id + "' in scoring batch");
    }
    nlohmann::ordered_json j;
    j["id"] = t.triplet_id;
    j["src"] = t.source;
    j["hyp"] = t.translation.text;
    j["ref"] = spec.needs_reference ? nlohmann::ordered_json(t.reference) : nullptr;
    j["direction"] = t.translation.direction.str();
    requests += j.dump() + "\n";
  }

  // stdin is a socket so writes can use MSG_NOSIGNAL if the child exits early.
  int in_pair[2];
  int out_pipe[2];
  int err_pipe[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, in_pair) != 0) {
    throw ScorerError("socketpair failed: " + std::string(std::strerror(errno)));
  }
  Fd in_parent(in_pair[0]), in_child(in_pair[1]);
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    throw ScorerError("pipe failed: " + std::string(std::strerror(errno)));
  }
  Fd out_read(out_pipe[0]), out_write(out_pipe[1]);
  if (::pipe2(err_pipe, O_CLOEXEC) != 0) {
    throw ScorerError("pipe failed: " + std::string(std::strerror(errno)));
  }
  Fd err_read(err_pipe[0]), err_write(err_pipe[1]);

  const pid_t pid = ::fork();
  if (pid < 0) throw ScorerError("fork failed: " + std::string(std::strerror(errno)));
  if (pid == 0) {
    ::dup2(in_child.get(), STDIN_FILENO);
    ::dup2(out_write.get(), STDOUT_FILENO);
    ::dup2(err_write.get(), STDERR_FILENO);
    ::execl("/bin/sh", "sh", "-c", cmd->command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  Child child(pid);
  in_child.reset();
  out_write.reset();
  err_write.reset();
  ::fcntl(in_parent.get(), F_SETFL, O_NONBLOCK);

  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(cmd->timeout_s));

  std::vector<std::optional<double>> scores(triplets.size());
  std::string out_buf;
  std::string err_text;
  std::size_t written = 0;
  std::size_t line_no = 0;
  std::optional<ProtocolError> protocol_failure;

  auto handle_line = [&](std::string_view line) {
    ++line_no;
    if (protocol_failure) return;
    const auto where = "scorer '" + spec.name + "' response line " + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      protocol_failure.emplace(where + ": unparsable JSON");
      return;
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("score") ||
        !j["score"].is_number()) {
      protocol_failure.emplace(where + ": expected {\"id\": string, \"score\": number}");
      return;
    }
    const auto id = j["id"].get<std::string>();
    const auto it = position.find(id);
    if (it == position.end()) {
      protocol_failure.emplace(where + ": unknown id '" + id + "'");
      return;
    }
    if (scores[it->second]) {
      protocol_failure.emplace(where + ": duplicate id '" + id + "'");
      return;
    }
    scores[it->second] = j["score"].get<double>();
  };

  bool out_open = true;
  bool err_open = true;
  while (out_open || err_open) {
    std::vector<pollfd> fds;
    if (in_parent) fds.push_back({in_parent.get(), POLLOUT, 0});
    if (out_open) fds.push_back({out_read.get(), POLLIN, 0});
    if (err_open) fds.push_back({err_read.get(), POLLIN, 0});

    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) {
      throw TimeoutError("scorer '" + spec.name + "' timed out after " +
                         std::to_string(cmd->timeout_s) + " s; stderr: " + tail(err_text));
    }
    const int ready = ::poll(fds.data(), fds.size(), static_cast<int>(remaining.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw ScorerError("poll failed: " + std::string(std::strerror(errno)));
    }
    for (const auto& p : fds) {
      if (p.revents == 0) continue;
      if (in_parent && p.fd == in_parent.get()) {
        if (p.revents & (POLLERR | POLLHUP)) {
          in_parent.reset();  // child stopped reading; its exit status decides
          continue;
        }
        const auto n = ::send(in_parent.get(), requests.data() + written,
                              requests.size() - written, MSG_NOSIGNAL);
        if (n < 0) {
          if (errno == EAGAIN || errno == EINTR) continue;
          in_parent.reset();
          continue;
        }
        written += static_cast<std::size_t>(n);
        if (written == requests.size()) {
          ::shutdown(in_parent.get(), SHUT_WR);
          in_parent.reset();
        }
      } else {
        char buf[8192];
        const auto n = ::read(p.fd, buf, sizeof(buf));
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) {
          if (p.fd == out_read.get()) out_open = false;
          else err_open = false;
          continue;
        }
        if (p.fd == out_read.get()) {
          out_buf.append(buf, static_cast<std::size_t>(n));
          std::size_t start = 0;
          for (auto nl = out_buf.find('\n'); nl != std::string::npos;
               nl = out_buf.find('\n', start)) {
            handle_line(std::string_view(out_buf).substr(start, nl - start));
            start = nl + 1;
          }
          out_buf.erase(0, start);
        } else if (err_text.size() < kMaxStderr) {
          err_text.append(buf, static_cast<std::size_t>(n));
        }
      }
    }
  }
  if (!out_buf.empty()) handle_line(out_buf);

  const int status = child.wait();
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw ScorerError("scorer '" + spec.name + "' failed (" + describe_status(status) +
                      ") after " + std::to_string(line_no) + " response(s); stderr: " +
                      tail(err_text));
  }
  if (protocol_failure) throw *protocol_failure;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!scores[i]) {
      throw ProtocolError("scorer '" + spec.name + "' returned no score for id '" +
                          triplets[i]->triplet_id + "'");
    }
  }

  std::vector<ScoreRecord> out;
  out.reserve(triplets.size());
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    out.push_back({triplets[i]->triplet_id, spec.name, *scores[i], spec.orient(*scores[i])});
  }
  return out;
}

}  // namespace xqm
