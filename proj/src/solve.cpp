#include "wcet/solve.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <mutex>
#include <optional>
#include <sstream>

#include "wcet/error.hpp"
#include "wcet/sexpr.hpp"

extern char** environ;

namespace wcet {

std::vector<std::string> split_command(const std::string& line) {
    std::istringstream is(line);
    std::vector<std::string> out;
    for (std::string w; is >> w;) out.push_back(w);
    return out;
}

SolverConfig default_solver_config() {
    SolverConfig cfg;
    const char* env = std::getenv("WCET_SMT_SOLVER");
    cfg.command = split_command(env && *env ? env : "z3 -in");
    if (cfg.command.empty()) cfg.command = {"z3", "-in"};
    const std::string& exe = cfg.command.front();
    std::string base = exe.substr(exe.find_last_of('/') == std::string::npos ? 0 : exe.find_last_of('/') + 1);
    if (base.rfind("z3", 0) == 0) cfg.options.push_back("(set-option :tactic.default_tactic smt)");
    return cfg;
}

std::string_view to_string(Verdict::Kind k) {
    switch (k) {
        case Verdict::Sat: return "sat";
        case Verdict::Unsat: return "unsat";
        case Verdict::Unknown: return "unknown";
        case Verdict::Timeout: return "timeout";
        case Verdict::SolverError: return "error";
    }
    return "?";
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void ignore_sigpipe() {
    static std::once_flag once;
    std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

Value parse_value(const SExpr& v) {
    if (v.is_atom) {
        if (v.atom == "true") return true;
        if (v.atom == "false") return false;
        Int x = 0;
        auto [p, ec] = std::from_chars(v.atom.data(), v.atom.data() + v.atom.size(), x);
        if (ec == std::errc() && p == v.atom.data() + v.atom.size()) return x;
    } else if (v.items.size() == 2 && v.items[0].is_symbol("-")) {
        Value inner = parse_value(v.items[1]);
        if (const auto* i = std::get_if<Int>(&inner)) return -*i;
    }
    throw Error("solve", "unsupported value in model: " + to_string(v));
}

std::string unquote(const std::string& sym) {
    if (sym.size() >= 2 && sym.front() == '|' && sym.back() == '|') return sym.substr(1, sym.size() - 2);
    return sym;
}

void read_model(const SExpr& e, Model& out) {
    if (e.is_atom) throw Error("solve", "expected a model, got '" + e.atom + "'");
    for (const auto& item : e.items) {
        if (item.is_atom) {
            if (item.atom == "model") continue;
            throw Error("solve", "unexpected atom in model: " + item.atom);
        }
        if (!item.items.empty() && item.items[0].is_symbol("define-fun")) {
            if (item.items.size() != 5) throw Error("solve", "malformed define-fun: " + to_string(item));
            if (!item.items[2].items.empty()) continue;  // functions with arguments are not ours
            out[unquote(item.items[1].atom)] = parse_value(item.items[4]);
            continue;
        }
        if (item.items.size() != 2 || !item.items[0].is_atom)
            throw Error("solve", "malformed value pair: " + to_string(item));
        out[unquote(item.items[0].atom)] = parse_value(item.items[1]);
    }
}

// Length of the first complete S-expression in `buf` (after leading blanks),
// or 0 if it is still incomplete.
std::size_t complete_prefix(const std::string& buf) {
    std::size_t i = 0;
    while (i < buf.size() && std::isspace(static_cast<unsigned char>(buf[i]))) ++i;
    if (i == buf.size()) return 0;
    if (buf[i] != '(') {
        while (i < buf.size() && !std::isspace(static_cast<unsigned char>(buf[i])) && buf[i] != '(') ++i;
        return i < buf.size() ? i : 0;
    }
    int depth = 0;
    for (; i < buf.size(); ++i) {
        char c = buf[i];
        if (c == '"') {
            for (++i; i < buf.size(); ++i)
                if (buf[i] == '"') {
                    if (i + 1 < buf.size() && buf[i + 1] == '"')
                        ++i;
                    else
                        break;
                }
            if (i >= buf.size()) return 0;
        } else if (c == '|') {
            for (++i; i < buf.size() && buf[i] != '|'; ++i) {
            }
            if (i >= buf.size()) return 0;
        } else if (c == '(') {
            ++depth;
        } else if (c == ')') {
            if (--depth == 0) return i + 1;
        }
    }
    return 0;
}

bool is_error(const SExpr& e) { return e.is_list() && !e.items.empty() && e.items[0].is_symbol("error"); }

}  // namespace

void parse_model(const std::string& text, Model& out) {
    for (const auto& e : parse_sexprs(text)) read_model(e, out);
}

Value eval_in_model(const Model& m, const Expr& term) {
    return evaluate(term, [&](const std::string& v) -> std::optional<Value> {
        auto it = m.find(v);
        if (it == m.end()) return std::nullopt;
        return it->second;
    });
}

// A running solver with pipes on stdin, stdout and stderr.
namespace detail {

struct SolverProc {
    pid_t pid = -1;
    int in = -1, out = -1, err = -1;
    std::string out_buf, err_buf;
    bool out_eof = false, err_eof = false;

    static std::unique_ptr<SolverProc> spawn(const std::vector<std::string>& cmd, std::string& error) {
        ignore_sigpipe();
        int pin[2], pout[2], perr[2];
        if (pipe2(pin, O_CLOEXEC) || pipe2(pout, O_CLOEXEC) || pipe2(perr, O_CLOEXEC)) {
            error = std::string("pipe: ") + std::strerror(errno);
            return nullptr;
        }
        posix_spawn_file_actions_t fa;
        posix_spawn_file_actions_init(&fa);
        posix_spawn_file_actions_adddup2(&fa, pin[0], 0);
        posix_spawn_file_actions_adddup2(&fa, pout[1], 1);
        posix_spawn_file_actions_adddup2(&fa, perr[1], 2);
        std::vector<char*> argv;
        for (const auto& a : cmd) argv.push_back(const_cast<char*>(a.c_str()));
        argv.push_back(nullptr);
        auto p = std::make_unique<SolverProc>();
        int rc = posix_spawnp(&p->pid, argv[0], &fa, nullptr, argv.data(), environ);
        posix_spawn_file_actions_destroy(&fa);
        ::close(pin[0]);
        ::close(pout[1]);
        ::close(perr[1]);
        if (rc != 0) {
            ::close(pin[1]);
            ::close(pout[0]);
            ::close(perr[0]);
            error = "cannot run solver '" + cmd.front() + "': " + std::strerror(rc);
            return nullptr;
        }
        p->in = pin[1];
        p->out = pout[0];
        p->err = perr[0];
        for (int fd : {p->in, p->out, p->err}) ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK);
        return p;
    }

    ~SolverProc() { kill(); }

    void close_in() {
        if (in >= 0) ::close(in);
        in = -1;
    }

    void kill() {
        close_in();
        if (pid > 0) {
            ::kill(pid, SIGKILL);
            reap();
        }
        for (int* fd : {&out, &err})
            if (*fd >= 0) {
                ::close(*fd);
                *fd = -1;
            }
    }

    int reap() {
        int status = 0;
        if (pid > 0) {
            while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
            }
            pid = -1;
        }
        return status;
    }

    // Pumps I/O until `done()` holds or the deadline passes. Returns false
    // on timeout.
    template <class Done>
    bool pump(std::string_view& pending, Clock::time_point deadline, Done done) {
        for (;;) {
            if (done()) return true;
            if (out_eof && err_eof && pending.empty()) return true;
            auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
            if (left <= 0) return false;
            pollfd fds[3];
            int n = 0;
            int wi = -1, oi = -1, ei = -1;
            if (!pending.empty() && in >= 0) {
                wi = n;
                fds[n++] = {in, POLLOUT, 0};
            }
            if (!out_eof) {
                oi = n;
                fds[n++] = {out, POLLIN, 0};
            }
            if (!err_eof) {
                ei = n;
                fds[n++] = {err, POLLIN, 0};
            }
            if (n == 0) return true;
            int rc = ::poll(fds, n, static_cast<int>(std::min<long long>(left, 1000)));
            if (rc < 0) {
                if (errno == EINTR) continue;
                return false;
            }
            if (wi >= 0 && fds[wi].revents) {
                ssize_t w = ::write(in, pending.data(), pending.size());
                if (w > 0)
                    pending.remove_prefix(static_cast<std::size_t>(w));
                else if (w < 0 && errno != EAGAIN && errno != EINTR)
                    pending = {};  // solver closed its input; let the output tell
            }
            auto drain = [](int fd, std::string& buf, bool& eof) {
                char tmp[65536];
                for (;;) {
                    ssize_t r = ::read(fd, tmp, sizeof tmp);
                    if (r > 0) {
                        buf.append(tmp, static_cast<std::size_t>(r));
                        continue;
                    }
                    if (r == 0) eof = true;
                    if (r < 0 && errno == EINTR) continue;
                    break;
                }
            };
            if (oi >= 0 && fds[oi].revents) drain(out, out_buf, out_eof);
            if (ei >= 0 && fds[ei].revents) drain(err, err_buf, err_eof);
        }
    }
};

}  // namespace detail

namespace {

std::string diagnostic(const std::string& msg, const std::string& err_buf) {
    std::string s = msg;
    if (!err_buf.empty()) s += "; stderr: " + err_buf.substr(0, 2000);
    return s;
}

// Interprets a full solver transcript of a one-shot script.
Verdict interpret(const std::string& out, const std::string& err, int status) {
    Verdict v;
    std::vector<SExpr> items;
    try {
        items = parse_sexprs(out);
    } catch (const Error& e) {
        v.kind = Verdict::SolverError;
        v.reason = diagnostic(std::string("unparsable solver output: ") + e.what(), err);
        return v;
    }
    std::optional<Verdict::Kind> kind;
    std::size_t i = 0;
    for (; i < items.size(); ++i) {
        const SExpr& e = items[i];
        if (e.is_symbol("sat")) kind = Verdict::Sat;
        else if (e.is_symbol("unsat")) kind = Verdict::Unsat;
        else if (e.is_symbol("unknown")) kind = Verdict::Unknown;
        else if (e.is_symbol("success") || e.is_symbol("unsupported")) continue;
        else if (is_error(e)) {
            v.kind = Verdict::SolverError;
            v.reason = diagnostic("solver error: " + to_string(e), err);
            return v;
        } else {
            v.kind = Verdict::SolverError;
            v.reason = diagnostic("unexpected solver output: " + to_string(e), err);
            return v;
        }
        break;
    }
    if (!kind) {
        v.kind = Verdict::SolverError;
        std::string why = "solver gave no verdict";
        if (WIFEXITED(status)) why += " (exit status " + std::to_string(WEXITSTATUS(status)) + ")";
        else if (WIFSIGNALED(status)) why += " (killed by signal " + std::to_string(WTERMSIG(status)) + ")";
        v.reason = diagnostic(why, err);
        return v;
    }
    v.kind = *kind;
    if (v.kind == Verdict::Unknown) v.reason = "solver returned unknown";
    if (v.kind != Verdict::Sat) return v;
    for (++i; i < items.size(); ++i) {
        if (is_error(items[i])) {
            v.kind = Verdict::SolverError;
            v.reason = diagnostic("solver error after sat: " + to_string(items[i]), err);
            return v;
        }
        try {
            read_model(items[i], v.model);
        } catch (const Error& e) {
            v.kind = Verdict::SolverError;
            v.reason = e.what();
            return v;
        }
    }
    return v;
}

}  // namespace

Verdict check(const std::string& script, const SolverConfig& cfg) {
    auto t0 = Clock::now();
    auto deadline = t0 + std::chrono::milliseconds(cfg.timeout_ms);
    Verdict v;
    if (cfg.command.empty()) {
        v.reason = "no solver command configured";
        return v;
    }
    std::string error;
    auto proc = detail::SolverProc::spawn(cfg.command, error);
    if (!proc) {
        v.kind = Verdict::SolverError;
        v.reason = error;
        v.elapsed_ms = ms_since(t0);
        return v;
    }
    std::string_view pending = script;
    bool ok = proc->pump(pending, deadline, [&] {
        if (pending.empty()) proc->close_in();
        return proc->out_eof && proc->err_eof;
    });
    if (!ok) {
        proc->kill();
        v.kind = Verdict::Timeout;
        v.reason = "no answer within " + std::to_string(cfg.timeout_ms) + " ms";
        v.elapsed_ms = ms_since(t0);
        return v;
    }
    proc->close_in();
    int status = proc->reap();
    v = interpret(proc->out_buf, proc->err_buf, status);
    v.elapsed_ms = ms_since(t0);
    return v;
}

SolverSession::SolverSession(SolverConfig cfg, std::string prefix) : cfg_(std::move(cfg)), prefix_(std::move(prefix)) {}

SolverSession::~SolverSession() { stop(); }

void SolverSession::stop() { proc_.reset(); }

void SolverSession::start() {
    std::string error;
    proc_ = detail::SolverProc::spawn(cfg_.command, error);
    if (!proc_) throw Error("solve", error);
    ++starts_;
    // Queued; flushed together with the first query.
    pending_init_ = prefix_;
    for (const auto& p : permanent_) pending_init_ += p + "\n";
}

void SolverSession::add_permanent(const std::string& smt) {
    permanent_.push_back("(assert " + smt + ")");
    if (proc_) pending_init_ += permanent_.back() + "\n";
}

Verdict SolverSession::query(const std::vector<std::string>& assertions, const std::vector<std::string>& values) {
    auto t0 = Clock::now();
    auto deadline = t0 + std::chrono::milliseconds(cfg_.timeout_ms);
    Verdict v;
    if (!proc_) {
        try {
            start();
        } catch (const Error& e) {
            v.kind = Verdict::SolverError;
            v.reason = e.what();
            return v;
        }
    }
    std::string cmd = std::move(pending_init_);
    pending_init_.clear();
    cmd += "(push 1)\n";
    for (const auto& a : assertions) cmd += "(assert " + a + ")\n";
    cmd += "(check-sat)\n";

    auto fail = [&](Verdict::Kind k, std::string why) {
        std::string err = proc_ ? proc_->err_buf : "";
        stop();
        v.kind = k;
        v.reason = diagnostic(why, err);
        v.elapsed_ms = ms_since(t0);
        return v;
    };
    // Reads one response, skipping acknowledgements.
    auto response = [&](std::string& text) -> bool {
        std::string_view pending = cmd;
        for (;;) {
            std::size_t n = 0;
            bool ok = proc_->pump(pending, deadline, [&] {
                n = complete_prefix(proc_->out_buf);
                return n > 0 && pending.empty();
            });
            if (!ok) return false;
            if (n == 0) return true;  // EOF
            text = proc_->out_buf.substr(0, n);
            proc_->out_buf.erase(0, n);
            auto first = text.find_first_not_of(" \t\r\n");
            text = first == std::string::npos ? "" : text.substr(first);
            if (text == "success" || text == "unsupported") continue;
            cmd.clear();
            return true;
        }
    };

    std::string text;
    if (!response(text)) return fail(Verdict::Timeout, "no answer within " + std::to_string(cfg_.timeout_ms) + " ms");
    if (text.empty()) return fail(Verdict::SolverError, "solver exited without a verdict");
    if (text == "sat") v.kind = Verdict::Sat;
    else if (text == "unsat") v.kind = Verdict::Unsat;
    else if (text == "unknown") v.kind = Verdict::Unknown;
    else return fail(Verdict::SolverError, "solver error: " + text);

    if (v.kind == Verdict::Sat && !values.empty()) {
        cmd = "(get-value (";
        for (std::size_t i = 0; i < values.size(); ++i) cmd += (i ? " " : "") + values[i];
        cmd += "))\n";
        if (!response(text)) return fail(Verdict::Timeout, "no model within the time budget");
        try {
            parse_model(text, v.model);
        } catch (const Error& e) {
            return fail(Verdict::SolverError, e.what());
        }
    }
    if (v.kind == Verdict::Unknown) v.reason = "solver returned unknown";
    std::string pop = "(pop 1)\n";
    std::string_view pv = pop;
    proc_->pump(pv, deadline + std::chrono::milliseconds(1000), [&] { return pv.empty(); });
    v.elapsed_ms = ms_since(t0);
    return v;
}

}  // namespace wcet
