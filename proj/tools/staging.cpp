#include "staging/cli.hpp"

int main(int argc, char** argv) { return staging::run_cli(argc, argv); }
