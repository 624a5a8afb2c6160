#include <cerrno>
#include <csignal>
#include <cstring>
#include <mutex>

#include <fcntl.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include "lexforge/error.hpp"
#include "lexforge/lexicon.hpp"
#include "lexforge/unicode.hpp"

namespace lexforge {

namespace {

constexpr int kReadTimeoutMs = 30000;

std::string strip_whitespace(std::string_view s) {
    std::string out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        const auto start = pos;
        const char32_t cp = unicode::next_code_point(s, pos);
        if (cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'　') continue;
        out.append(s.substr(start, pos - start));
    }
    return out;
}

}  // namespace

struct ProcessSegmenter::Impl {
    std::vector<std::string> command;
    pid_t pid = -1;
    int fd = -1;
    std::string buffer;
    std::mutex mutex;

    void start() {
        int sv[2];
        if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0)
            throw SegmentationError(std::string("socketpair failed: ") + std::strerror(errno));
        std::vector<char*> argv;
        for (auto& a : command) argv.push_back(a.data());
        argv.push_back(nullptr);
        pid = ::fork();
        if (pid < 0) {
            ::close(sv[0]);
            ::close(sv[1]);
            throw SegmentationError(std::string("fork failed: ") + std::strerror(errno));
        }
        if (pid == 0) {
            ::dup2(sv[1], STDIN_FILENO);
            ::dup2(sv[1], STDOUT_FILENO);
            ::execvp(argv[0], argv.data());
            ::_exit(127);
        }
        ::close(sv[1]);
        fd = sv[0];
    }

    void stop() {
        if (fd >= 0) {
            ::shutdown(fd, SHUT_RDWR);
            ::close(fd);
            fd = -1;
        }
        if (pid > 0) {
            int status = 0;
            if (::waitpid(pid, &status, WNOHANG) == 0) {
                ::kill(pid, SIGTERM);
                ::waitpid(pid, &status, 0);
            }
            pid = -1;
        }
    }

    void send_line(std::string_view line) {
        std::string data(line);
        data += '\n';
        std::size_t off = 0;
        while (off < data.size()) {
            const auto n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw SegmentationError("segmenter process closed its input: " + std::string(std::strerror(errno)));
            }
            off += static_cast<std::size_t>(n);
        }
    }

    std::string read_line() {
        while (true) {
            if (const auto nl = buffer.find('\n'); nl != std::string::npos) {
                std::string line = buffer.substr(0, nl);
                buffer.erase(0, nl + 1);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return line;
            }
            pollfd p{fd, POLLIN, 0};
            const int ready = ::poll(&p, 1, kReadTimeoutMs);
            if (ready == 0) throw SegmentationError("segmenter process timed out");
            if (ready < 0) {
                if (errno == EINTR) continue;
                throw SegmentationError(std::string("poll failed: ") + std::strerror(errno));
            }
            char chunk[4096];
            const auto n = ::recv(fd, chunk, sizeof chunk, 0);
            if (n == 0) throw SegmentationError("segmenter process exited");
            if (n < 0) {
                if (errno == EINTR) continue;
                throw SegmentationError(std::string("read failed: ") + std::strerror(errno));
            }
            buffer.append(chunk, static_cast<std::size_t>(n));
        }
    }
};

ProcessSegmenter::ProcessSegmenter(std::vector<std::string> command) : impl_(std::make_unique<Impl>()) {
    if (command.empty()) throw SegmentationError("empty segmenter command");
    impl_->command = std::move(command);
    impl_->start();
}

ProcessSegmenter::~ProcessSegmenter() { impl_->stop(); }

std::vector<Token> ProcessSegmenter::segment(std::string_view text) {
    if (!unicode::is_valid_utf8(text)) throw SegmentationError("input is not valid UTF-8");
    std::string line(text);
    for (auto& c : line)
        if (c == '\n' || c == '\r') c = ' ';

    std::lock_guard lock(impl_->mutex);
    impl_->send_line(line);
    std::vector<Token> tokens;
    while (true) {
        const auto row = impl_->read_line();
        if (row == "EOS") break;
        if (row.empty()) continue;
        const auto t1 = row.find('\t');
        const auto t2 = t1 == std::string::npos ? std::string::npos : row.find('\t', t1 + 1);
        if (t2 == std::string::npos)
            throw SegmentationError("malformed segmenter output line: " + row);
        Token t{row.substr(0, t1), row.substr(t1 + 1, t2 - t1 - 1), row.substr(t2 + 1)};
        if (t.surface.empty()) throw SegmentationError("segmenter returned an empty surface");
        if (t.lemma.empty() || t.lemma == "*") t.lemma = t.surface;
        tokens.push_back(std::move(t));
    }
    std::string joined;
    for (const auto& t : tokens) joined += t.surface;
    if (strip_whitespace(joined) != strip_whitespace(text))
        throw SegmentationError("segmenter output does not reconstruct the input");
    return tokens;
}

std::string ProcessSegmenter::name() const {
    std::string n = "process:";
    for (const auto& a : impl_->command) n += (n.size() > 8 ? " " : "") + a;
    return n;
}

}  // namespace lexforge
