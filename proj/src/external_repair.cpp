#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "lens/instance_io.hpp"
#include "lens/repair.hpp"

namespace lens {

namespace {

class TempFile {
public:
    TempFile() {
        const char* dir = std::getenv("TMPDIR");
        std::string pattern = std::string(dir && *dir ? dir : "/tmp") + "/lens_ext_XXXXXX";
        std::vector<char> buf(pattern.begin(), pattern.end());
        buf.push_back('\0');
        const int fd = ::mkstemp(buf.data());
        if (fd < 0) throw Error(ErrorKind::ExternalFailure, "cannot create temporary file");
        ::close(fd);
        path_ = buf.data();
    }
    ~TempFile() { ::unlink(path_.c_str()); }
    TempFile(const TempFile&) = delete;
    TempFile& operator=(const TempFile&) = delete;

    const std::string& path() const { return path_; }

private:
    std::string path_;
};

// Exit status of `/bin/sh -c command` with stdin/stdout redirected.
int run_shell(const std::string& command, const std::string& in_path, const std::string& out_path,
              double timeout_seconds) {
    const pid_t pid = ::fork();
    if (pid < 0) throw Error(ErrorKind::ExternalFailure, "fork failed");
    if (pid == 0) {
        const int in = ::open(in_path.c_str(), O_RDONLY);
        const int out = ::open(out_path.c_str(), O_WRONLY | O_TRUNC);
        if (in < 0 || out < 0) ::_exit(126);
        ::dup2(in, STDIN_FILENO);
        ::dup2(out, STDOUT_FILENO);
        ::close(in);
        ::close(out);
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_seconds);
    int status = 0;
    while (true) {
        const pid_t r = ::waitpid(pid, &status, WNOHANG);
        if (r == pid) break;
        if (r < 0) throw Error(ErrorKind::ExternalFailure, "waitpid failed");
        if (std::chrono::steady_clock::now() > deadline) {
            ::kill(pid, SIGKILL);
            ::waitpid(pid, &status, 0);
            throw Error(ErrorKind::ExternalFailure, "timed out after " + std::to_string(timeout_seconds) + " s");
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
}

std::vector<Route> parse_routes(const std::string& text) {
    std::vector<std::string> lines;
    {
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) lines.push_back(line);
    }
    std::size_t first = 0;
    for (std::size_t i = 0; i < lines.size(); ++i)
        if (lines[i].find_first_not_of(" \t\r") != std::string::npos &&
            lines[i].substr(lines[i].find_first_not_of(" \t\r"), 6) == "ROUTES")
            first = i + 1;

    std::vector<Route> routes;
    for (std::size_t i = first; i < lines.size(); ++i) {
        std::istringstream row(lines[i]);
        std::string tok;
        Route r;
        while (row >> tok) {
            std::size_t used = 0;
            int id = 0;
            try {
                id = std::stoi(tok, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != tok.size())
                throw Error(ErrorKind::ExternalFailure, "unparseable output line " + std::to_string(i + 1));
            if (id != 0) r.customer_ids.push_back(id);  // tolerate explicit depot ids
        }
        if (!r.empty()) routes.push_back(std::move(r));
    }
    return routes;
}

}  // namespace

std::vector<Route> external_repair(const SubProblem& sub, const std::vector<Route>& warm_start,
                                   const std::string& command, double timeout_seconds) {
    TempFile in_file;
    TempFile out_file;
    {
        std::ofstream in(in_file.path(), std::ios::binary | std::ios::trunc);
        in << write_instance(sub.instance) << "ROUTES\n";
        for (const Route& r : warm_start) {
            for (std::size_t k = 0; k < r.customer_ids.size(); ++k) in << (k ? " " : "") << r.customer_ids[k];
            in << '\n';
        }
        if (!in) throw Error(ErrorKind::ExternalFailure, "cannot write solver input");
    }
    const int code = run_shell(command, in_file.path(), out_file.path(), timeout_seconds);
    if (code != 0)
        throw Error(ErrorKind::ExternalFailure, "'" + command + "' exited with status " + std::to_string(code));

    std::ifstream out(out_file.path(), std::ios::binary);
    std::ostringstream buf;
    buf << out.rdbuf();
    std::vector<Route> plan = parse_routes(buf.str());

    const Solution proposed{plan};
    const FeasibilityReport report = check_feasibility(sub.instance, proposed);
    if (!report.feasible()) {
        std::cerr << "ExternalFailure: plan rejected (" << to_string(report.violations.front().kind)
                  << "), keeping warm start\n";
        return warm_start;
    }
    if (solution_cost(sub.instance, proposed) > solution_cost(sub.instance, Solution{warm_start})) {
        std::cerr << "ExternalFailure: plan costlier than warm start, keeping warm start\n";
        return warm_start;
    }
    return plan;
}

}  // namespace lens
