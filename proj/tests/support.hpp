#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace testsupport {

inline std::filesystem::path repo_dir() { return FILMAGENT_REPO_DIR; }

inline std::filesystem::path data(const std::string& rel) {
    return repo_dir() / "data" / rel;
}

inline std::filesystem::path fixture(const std::string& rel) {
    return repo_dir() / "fixtures" / rel;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

inline std::filesystem::path fresh_temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "filmagent_tests" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace testsupport
