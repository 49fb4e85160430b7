#pragma once

// Small builders and filesystem helpers shared by the test executables.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "designsense/layout.hpp"
#include "designsense/preference.hpp"

namespace dsense::testing {

inline Layout make_layout(std::string id, std::vector<BBox> boxes, Canvas canvas = {1000, 1000},
                          ElementKind kind = ElementKind::text) {
    Layout l;
    l.layout_id = std::move(id);
    l.canvas = canvas;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        Element e;
        e.id = "e" + std::to_string(i);
        e.kind = kind;
        e.bbox = boxes[i];
        e.z = static_cast<int>(i);
        e.label = "element " + std::to_string(i);
        l.elements.push_back(e);
    }
    return l;
}

inline PreferencePair make_pair(std::string id, Layout left, Layout right) {
    PreferencePair p;
    p.pair_id = std::move(id);
    p.left = std::move(left);
    p.right = std::move(right);
    return p;
}

// Unique scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "dsense") {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string str() const { return path_.string(); }
    std::string operator/(const std::string& rel) const { return (path_ / rel).string(); }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    out << contents;
}

inline std::size_t count_occurrences(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (std::size_t pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + needle.size())) ++n;
    return n;
}

}  // namespace dsense::testing
