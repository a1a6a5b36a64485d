#include "velo/cli.hpp"

int main(int argc, char** argv) { return velo::run_cli(argc, argv); }
