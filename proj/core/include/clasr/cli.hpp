#ifndef CLASR_CLI_HPP
#define CLASR_CLI_HPP

namespace clasr {

/// Subcommands: run, sweep, report, gen-data.
/// Exit codes: 0 success, 1 configuration error, 2 runtime failure.
int cli_main(int argc, const char* const* argv);

}  // namespace clasr

#endif  // CLASR_CLI_HPP
