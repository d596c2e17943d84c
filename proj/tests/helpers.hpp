#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "frontal/tensor.hpp"

namespace testutil {

// Scratch directory removed at scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("frontal_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

struct RunResult {
    int exit_code = -1;
    std::string output; // stdout + stderr
};

// Runs the built CLI with the given arguments.
inline RunResult run_cli(const std::string& args) {
    static int counter = 0;
    const std::filesystem::path capture =
        std::filesystem::temp_directory_path() /
        ("frontal_cli_out_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    const std::string cmd =
        std::string("\"") + FRONTAL_CLI_PATH + "\" " + args + " > \"" + capture.string() +
        "\" 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(capture);
    r.output.assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::filesystem::remove(capture);
    return r;
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::trunc);
    out << text;
}

inline bool bit_equal(const frontal::Tensor& a, const frontal::Tensor& b) {
    if (a.shape() != b.shape()) return false;
    const auto av = a.values();
    const auto bv = b.values();
    for (std::size_t i = 0; i < av.size(); ++i) {
        if (av[i] != bv[i]) return false;
    }
    return true;
}

} // namespace testutil
