#include "factopt/cli.hpp"

int main(int argc, char** argv) { return factopt::cli_main(argc, argv); }
