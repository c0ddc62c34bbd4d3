#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "core/trajectory.hpp"

namespace drcut::testing {

// Scratch directory wiped on destruction; file(name) returns a path inside.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        dir_ = std::filesystem::temp_directory_path() /
               ("drcut_test_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::create_directories(dir_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(dir_, ec);
    }
    std::string file(const std::string& name) const { return (dir_ / name).string(); }

private:
    std::filesystem::path dir_;
};

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Subject builder for hand-crafted paths. Jumps start at {0, 1}.
inline ObservedSubject make_subject(std::int64_t id, double w, std::vector<Jump> jumps,
                                    double c, bool censored) {
    ObservedSubject s;
    s.id = id;
    s.w = w;
    s.jumps = std::move(jumps);
    s.c = c;
    s.censored = censored;
    return s;
}

}  // namespace drcut::testing
