// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

namespace planwork {

// Root of the bundled data files (templates, exemplars, vocabularies).
// PLANWORK_DATA_DIR in the environment overrides the build-time default.
std::string data_dir();
std::string data_path(std::string_view relative);

} // namespace planwork
