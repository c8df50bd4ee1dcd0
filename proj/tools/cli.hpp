/*
 * csr3d - cascaded shape-space regression for 3D face reconstruction.
 *
 * File: tools/cli.hpp
 *
 * Copyright 2026 The csr3d Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#ifndef CSR3D_TOOLS_CLI_HPP
#define CSR3D_TOOLS_CLI_HPP

#include <ostream>

namespace csr3d::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_validation = 1,
    exit_numerical = 2,
    exit_io = 3,
};

/// Runs the csr3d command line. Data goes to out, diagnostics to err.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace csr3d::cli

#endif // CSR3D_TOOLS_CLI_HPP
