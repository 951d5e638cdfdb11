#include "kftune/cli.hpp"

int main(int argc, char** argv) { return kftune::run_cli(argc, argv); }
