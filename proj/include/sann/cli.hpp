#pragma once

namespace sann::cli {

/// Exit codes: 0 success (and, for experiments, every verdict passed);
/// 1 a run failed or a verdict failed; 2 usage, configuration or input error.
int run(int argc, char** argv);

}  // namespace sann::cli
