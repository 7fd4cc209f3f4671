#include "cli/cli.hpp"

int main(int argc, char** argv) { return affedit::cli::run(argc, argv); }
