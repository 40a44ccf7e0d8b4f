#include "pbk/cli.hpp"

int main(int argc, char** argv) { return pbk::cli::main(argc, argv); }
