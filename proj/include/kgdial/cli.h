// Copyright 2026 The kgdial Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef KGDIAL_CLI_H_
#define KGDIAL_CLI_H_

#include <exception>
#include <istream>
#include <ostream>

namespace kgdial {

enum ExitCode { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitRuntime = 3 };

// argv[0] is the program name, argv[1] the subcommand. Results go to out,
// diagnostics to err; chat reads its turns from in.
int dispatch(int argc, const char *const *argv, std::istream &in, std::ostream &out,
             std::ostream &err);

// Maps a caught exception onto an exit status.
int exit_code_for(const std::exception &e);

// Reads KGDIAL_LOG (error, info, debug; default info) and routes the log to
// stderr.
void configure_logging();

}  // namespace kgdial

#endif  // KGDIAL_CLI_H_
