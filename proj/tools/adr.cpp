#include "adr/cli.hpp"

int main(int argc, char** argv) { return adr::run_cli(argc, argv); }
