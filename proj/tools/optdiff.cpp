#include "optdiff/cli.hpp"

int main(int argc, char** argv) { return optdiff::cli::run(argc, argv); }
