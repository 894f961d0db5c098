#include "nhil/harness/cli.hpp"

int main(int argc, char** argv) { return nhil::cli_main(argc, argv); }
