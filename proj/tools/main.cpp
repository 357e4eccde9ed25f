#include "abx/cli.hpp"

int main(int argc, char** argv) { return abx::cli::main(argc, argv); }
