// SPDX-License-Identifier: Apache-2.0

#include "specloop/subprocess.hpp"

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace specloop {

namespace {

int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

void drain(int fd, std::string& sink) {
    char buf[4096];
    while (true) {
        ssize_t n = ::read(fd, buf, sizeof(buf));
        if (n > 0)
            sink.append(buf, static_cast<size_t>(n));
        else
            break;
    }
}

} // namespace

std::vector<std::string> split_command(const std::string& cmd) {
    std::vector<std::string> out;
    std::string cur;
    char quote = 0;
    bool in_token = false;
    for (char c : cmd) {
        if (quote) {
            if (c == quote)
                quote = 0;
            else
                cur += c;
            continue;
        }
        if (c == '\'' || c == '"') {
            quote = c;
            in_token = true;
            continue;
        }
        if (c == ' ' || c == '\t') {
            if (in_token) {
                out.push_back(cur);
                cur.clear();
                in_token = false;
            }
            continue;
        }
        cur += c;
        in_token = true;
    }
    if (in_token) out.push_back(cur);
    return out;
}

bool executable_exists(const std::string& arg0) {
    if (arg0.empty()) return false;
    if (arg0.find('/') != std::string::npos)
        return ::access(arg0.c_str(), X_OK) == 0;
    const char* path = std::getenv("PATH");
    if (!path) return false;
    std::string paths(path);
    size_t pos = 0;
    while (pos <= paths.size()) {
        size_t colon = paths.find(':', pos);
        std::string dir = paths.substr(pos, colon == std::string::npos ? std::string::npos
                                                                       : colon - pos);
        if (!dir.empty() && ::access((dir + "/" + arg0).c_str(), X_OK) == 0) return true;
        if (colon == std::string::npos) break;
        pos = colon + 1;
    }
    return false;
}

ExecResult run_process(const std::vector<std::string>& argv, const ExecOptions& opts) {
    ExecResult result;
    if (argv.empty()) {
        result.launch_failed = true;
        result.err = "empty argv";
        return result;
    }

    int out_pipe[2], err_pipe[2];
    if (pipe(out_pipe) != 0 || pipe(err_pipe) != 0) {
        result.launch_failed = true;
        result.err = std::strerror(errno);
        return result;
    }

    auto t0 = now_ms();
    pid_t pid = fork();
    if (pid < 0) {
        result.launch_failed = true;
        result.err = std::strerror(errno);
        return result;
    }

    if (pid == 0) {
        // Child: own process group so a timeout kill reaps grandchildren too.
        setpgid(0, 0);
        if (!opts.cwd.empty() && chdir(opts.cwd.c_str()) != 0) _exit(126);
        dup2(out_pipe[1], STDOUT_FILENO);
        dup2(err_pipe[1], STDERR_FILENO);
        close(out_pipe[0]);
        close(out_pipe[1]);
        close(err_pipe[0]);
        close(err_pipe[1]);
        std::vector<char*> cargv;
        cargv.reserve(argv.size() + 1);
        for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
        cargv.push_back(nullptr);
        execvp(cargv[0], cargv.data());
        _exit(127);
    }

    close(out_pipe[1]);
    close(err_pipe[1]);
    fcntl(out_pipe[0], F_SETFL, O_NONBLOCK);
    fcntl(err_pipe[0], F_SETFL, O_NONBLOCK);

    const int64_t deadline = t0 + (opts.timeout_ms > 0 ? opts.timeout_ms : 1);
    bool out_open = true, err_open = true;
    int status = 0;
    bool exited = false;

    while (true) {
        if (!exited) {
            pid_t w = waitpid(pid, &status, WNOHANG);
            if (w == pid) exited = true;
        }

        struct pollfd fds[2];
        nfds_t nfds = 0;
        if (out_open) fds[nfds++] = {out_pipe[0], POLLIN, 0};
        if (err_open) fds[nfds++] = {err_pipe[0], POLLIN, 0};

        int64_t remain = deadline - now_ms();
        if (remain < 0) remain = 0;
        int timeout = exited ? 0 : static_cast<int>(std::min<int64_t>(remain, 50));
        if (nfds > 0) poll(fds, nfds, timeout);

        char buf[4096];
        if (out_open) {
            ssize_t n = ::read(out_pipe[0], buf, sizeof(buf));
            if (n > 0)
                result.out.append(buf, static_cast<size_t>(n));
            else if (n == 0)
                out_open = false;
        }
        if (err_open) {
            ssize_t n = ::read(err_pipe[0], buf, sizeof(buf));
            if (n > 0)
                result.err.append(buf, static_cast<size_t>(n));
            else if (n == 0)
                err_open = false;
        }

        if (exited && !out_open && !err_open) break;
        if (exited && now_ms() > deadline + 1000) break; // pipes held open by grandchildren

        if (!exited && now_ms() >= deadline) {
            result.timed_out = true;
            kill(-pid, SIGKILL);
            kill(pid, SIGKILL);
            waitpid(pid, &status, 0);
            exited = true;
            drain(out_pipe[0], result.out);
            drain(err_pipe[0], result.err);
            break;
        }
    }

    close(out_pipe[0]);
    close(err_pipe[0]);

    result.duration_ms = static_cast<long>(now_ms() - t0);
    if (result.timed_out) {
        result.exit_code = -1;
    } else if (WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
        if (result.exit_code == 127) result.launch_failed = true;
    } else if (WIFSIGNALED(status)) {
        result.exit_code = 128 + WTERMSIG(status);
    }
    return result;
}

} // namespace specloop
