#include "clasr/cli.hpp"

int main(int argc, char** argv) { return clasr::cli_main(argc, argv); }
