#pragma once
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "taxodng/matrix.hpp"
#include "taxodng/rng.hpp"

namespace testutil {

// Unique scratch directory removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("taxodng_" + tag + "_" + std::to_string(++counter) + "_" +
                 std::to_string(static_cast<unsigned>(::getpid())));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string str() const { return path_.string(); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

  private:
    std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline taxodng::Matrix random_matrix(std::size_t r, std::size_t c, taxodng::Rng& rng,
                                     double lo = -1.0, double hi = 1.0) {
    taxodng::Matrix m(r, c);
    for (double& v : m.a) v = rng.uniform(lo, hi);
    return m;
}

}  // namespace testutil
