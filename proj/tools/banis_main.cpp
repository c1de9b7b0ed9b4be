#include "banis/cli.hpp"

int main(int argc, char** argv) { return banis::cli_main(argc, argv); }
