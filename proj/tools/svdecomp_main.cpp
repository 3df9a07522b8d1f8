#include "svdecomp/cli.hpp"

int main(int argc, char** argv) { return svdecomp::cli::run(argc, argv); }
