#pragma once

namespace nhil {

/// Exit codes: 0 success, 1 run failure, 2 usage error.
int cli_main(int argc, const char* const* argv);

} // namespace nhil
