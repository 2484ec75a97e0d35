#include "protofold/cli.hpp"

int main(int argc, char** argv) { return protofold::cli::run(argc, argv); }
