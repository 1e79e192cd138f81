#include "pitsim/cli.hpp"

int main(int argc, char** argv) { return pitsim::run_cli(argc, argv); }
