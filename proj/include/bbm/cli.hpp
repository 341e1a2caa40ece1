#pragma once

namespace bbm::cli {

/// Entry point behind the bbm binary; exposed so tests can drive the full
/// command surface in-process. Returns the process exit code: 0 when all
/// hard assertions of the selected experiment pass, 1 on assertion
/// failure, 2 on configuration errors.
int run(int argc, const char* const* argv);

}  // namespace bbm::cli
