#include "bite/cli.hpp"

int main(int argc, char** argv) { return bite::cli_main(argc, argv); }
