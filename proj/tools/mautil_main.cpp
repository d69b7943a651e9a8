#include "mautil/cli.hpp"

int main(int argc, char** argv) { return mautil::run_cli(argc, argv); }
