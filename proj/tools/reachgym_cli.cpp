#include "reachgym/cli.hpp"

int main(int argc, char** argv) { return reachgym::cli_main(argc, argv); }
