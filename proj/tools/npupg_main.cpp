#include "npupg/cli.hpp"

int main(int argc, char** argv) { return npupg::cli_main(argc, argv); }
