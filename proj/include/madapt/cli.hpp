#pragma once

namespace madapt {

/// Command-line driver (generate | sample | metric | adapt | stats).
/// Exit codes: 0 success, 2 usage error, 3 input error, 4 solver failure.
int run_cli(int argc, const char* const* argv);

}  // namespace madapt
