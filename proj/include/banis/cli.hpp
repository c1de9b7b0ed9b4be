#pragma once

namespace banis {

// Command dispatch for the `banis` executable; exposed as a function so the
// test suite can drive subcommands in-process.
int cli_main(int argc, char** argv);

} // namespace banis
