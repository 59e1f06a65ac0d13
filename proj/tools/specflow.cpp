#include "specflow/cli.hpp"

int main(int argc, char** argv) { return specflow::cli::main(argc, argv); }
