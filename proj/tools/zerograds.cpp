#include "zerograds/cli.hpp"

int main(int argc, char** argv) { return zg::cli_main(argc, argv); }
