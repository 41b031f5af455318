#include "ecgmon/cli.hpp"

int main(int argc, char** argv) { return ecgmon::cli_main(argc, argv); }
