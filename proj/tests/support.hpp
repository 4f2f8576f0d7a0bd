// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "planwork/error.hpp"

#include <doctest.h>

#include <filesystem>
#include <random>
#include <string>

namespace test_support {

inline std::string source_path(const std::string& rel) { return std::string(PLANWORK_SOURCE_DIR) + "/" + rel; }

// Fresh scratch directory under the system temp dir, removed on destruction.
struct TempDir {
    std::filesystem::path path;
    TempDir() {
        std::random_device rd;
        path = std::filesystem::temp_directory_path() / ("planwork-test-" + std::to_string(rd()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

} // namespace test_support

// Runs `expr` and checks that it throws planwork::Error with `code`.
#define CHECK_ERROR_CODE(expr, expected)                                                                     \
    do {                                                                                                     \
        bool thrown_ = false;                                                                                \
        try {                                                                                                \
            (void)(expr);                                                                                    \
        } catch (const planwork::Error& e_) {                                                                \
            thrown_ = true;                                                                                  \
            CHECK_MESSAGE(e_.code() == (expected), e_.what());                                               \
        }                                                                                                    \
        CHECK_MESSAGE(thrown_, "expected planwork::Error");                                                  \
    } while (0)
