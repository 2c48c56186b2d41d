#include "cli.hpp"

int main(int argc, char** argv) { return jointflow::cli::runCli(argc, argv); }
